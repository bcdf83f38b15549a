"""
Shared execution wrapper for pipeline stages.

Each stage implements `run(state)`; `execute` adds timing, metrics, failure
capture and the bookkeeping fields of the state.
"""
import logging
from typing import Any, Dict, List

from mdpcert.errors import (
    CertificationToolError,
    ConfigurationError,
    EstimationError,
    ExitCode,
    InsufficientDataError,
    LipschitzInputError,
    NumericError,
    ParameterError,
    ProvenanceError,
    SpecificationError,
    UnboundedSampleSizeError,
    UnsupportedHorizonError,
)
from mdpcert.graph.context import RunContext
from mdpcert.graph.state import PipelineState
from mdpcert.observability import metrics
from mdpcert.utils.timing import timer

logger = logging.getLogger(__name__)

_EXIT_CODES = (
    ((ConfigurationError, ParameterError, SpecificationError, LipschitzInputError, UnsupportedHorizonError),
     ExitCode.CONFIG_ERROR),
    ((InsufficientDataError, UnboundedSampleSizeError, ProvenanceError), ExitCode.INSUFFICIENT_DATA),
    ((NumericError, EstimationError), ExitCode.NUMERIC_ERROR),
)


def exit_code_for(exc: Exception) -> ExitCode:
    """Map an exception to the pipeline exit code."""
    for types, code in _EXIT_CODES:
        if isinstance(exc, types):
            return code
    return ExitCode.TOOL_ERROR


def per_subsystem(state: PipelineState, field: str) -> List[Any]:
    """Expand a group-keyed state entry to one value per subsystem."""
    mapping = state[field]
    values: List[Any] = [None] * state["network"].size
    for group in state["groups"]:
        for index in group["members"]:
            values[index] = mapping[group["key"]]
    return values


def stage_failure(stage: str, code: ExitCode, reason: str, **details: Any) -> Dict[str, Any]:
    """State update recording that `stage` halted the run."""
    metrics.stage_failure_total.labels(stage=stage, reason=code.name.lower()).inc()
    logger.warning(f"Stage {stage} halted the run ({code.name}): {reason}")
    return {"failure": {"stage": stage, "exit_code": int(code), "reason": reason, "details": details}}


class StageNode:
    """Base class of the pipeline stages (dependencies injected via constructor)."""

    NODE_NAME = "stage"

    def __init__(self, ctx: RunContext):
        self.ctx = ctx
        self._hits = 0

    @property
    def cfg(self):
        return self.ctx.cfg

    def run(self, state: PipelineState) -> Dict[str, Any]:
        raise NotImplementedError

    def execute(self, state: PipelineState) -> Dict[str, Any]:
        """
        Execute the stage.

        Returns:
            State updates
        """
        logger.info(f"Executing {self.NODE_NAME} stage")
        self._hits = 0
        with timer() as timer_ctx:
            try:
                updates = self.run(state)
            except CertificationToolError as exc:
                details = dict(getattr(exc, "diagnostics", {}) or {})
                trace = getattr(exc, "trace", None)
                if trace:
                    details["trace"] = list(trace)
                updates = stage_failure(
                    self.NODE_NAME, exit_code_for(exc), f"{type(exc).__name__}: {exc}", **details
                )
        elapsed = timer_ctx["elapsed"]
        metrics.stage_latency_seconds.labels(stage=self.NODE_NAME).observe(elapsed)

        updates = dict(updates or {})
        updates["nodes_executed"] = state.get("nodes_executed", []) + [self.NODE_NAME]
        updates["timings"] = {**state.get("timings", {}), self.NODE_NAME: elapsed}
        if self._hits:
            updates["cache_hits"] = {**state.get("cache_hits", {}), self.NODE_NAME: self._hits}
        return updates

    def cached(self, key: str, compute):
        """Run `compute` through the artifact cache, counting hits for this execution."""
        value, hit = self.ctx.cache.get_or_compute(key, self.NODE_NAME, compute)
        self._hits += int(hit)
        return value
