"""
LangGraph pipeline definition.
Orchestrates setup → sample size → scenario → certify → compose → closeness
→ abstraction → synthesis → validation → report.
"""
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from langgraph.graph import END, StateGraph

from mdpcert.cache.memory_cache import MemoryCache
from mdpcert.config import settings
from mdpcert.errors import ExitCode
from mdpcert.graph.context import RunContext
from mdpcert.graph.state import PipelineState
from mdpcert.models import PipelineConfig
from mdpcert.nodes.abstraction_node import AbstractionNode
from mdpcert.nodes.certify_node import CertifyNode
from mdpcert.nodes.closeness_node import ClosenessNode
from mdpcert.nodes.compose_node import ComposeNode
from mdpcert.nodes.report_node import ReportNode
from mdpcert.nodes.sample_size_node import SampleSizeNode
from mdpcert.nodes.scenario_node import ScenarioNode
from mdpcert.nodes.setup_node import SetupNode
from mdpcert.nodes.synthesis_node import SynthesisNode
from mdpcert.nodes.validation_node import ValidationNode

logger = logging.getLogger(__name__)

STAGE_ORDER = (
    "setup", "sample_size", "scenario", "certify", "compose",
    "closeness", "abstraction", "synthesis", "validation",
)


class PipelineGraphFactory:
    """
    Factory for the pipeline graph.

    Stages receive the run context via constructor injection; this is the
    composition root where they are wired together.
    """

    def __init__(self, ctx: RunContext, started_at: Optional[datetime] = None):
        self.ctx = ctx
        self.started_at = started_at

    def create_graph(self):
        """
        Create and compile the LangGraph workflow.

        Every stage routes to `report` as soon as it records a failure;
        `setup` routes straight to `compose` when certificates were reloaded.

        Returns:
            Compiled LangGraph
        """
        nodes = {
            "setup": SetupNode(self.ctx),
            "sample_size": SampleSizeNode(self.ctx),
            "scenario": ScenarioNode(self.ctx),
            "certify": CertifyNode(self.ctx),
            "compose": ComposeNode(self.ctx),
            "closeness": ClosenessNode(self.ctx),
            "abstraction": AbstractionNode(self.ctx),
            "synthesis": SynthesisNode(self.ctx),
            "validation": ValidationNode(self.ctx),
            "report": ReportNode(self.ctx, self.started_at),
        }

        workflow = StateGraph(PipelineState)
        for name, node in nodes.items():
            workflow.add_node(name, node.execute)
        workflow.set_entry_point("setup")

        def route_after_setup(state: PipelineState) -> str:
            if state.get("failure"):
                return "report"
            return "compose" if state.get("resumed") else "sample_size"

        workflow.add_conditional_edges(
            "setup",
            route_after_setup,
            {"report": "report", "compose": "compose", "sample_size": "sample_size"},
        )

        def continue_or_report(next_stage: str):
            def route(state: PipelineState) -> str:
                return "report" if state.get("failure") else next_stage
            return route

        for current, following in zip(STAGE_ORDER[1:], STAGE_ORDER[2:] + ("report",)):
            workflow.add_conditional_edges(
                current,
                continue_or_report(following),
                {"report": "report", following: following},
            )

        workflow.add_edge("report", END)

        app = workflow.compile()
        logger.info("Pipeline graph compiled successfully")
        return app


def create_pipeline_graph(ctx: RunContext, started_at: Optional[datetime] = None):
    """Convenience function to create the pipeline graph."""
    return PipelineGraphFactory(ctx, started_at).create_graph()


def default_run_dir(cfg: PipelineConfig) -> Path:
    root = Path(cfg.output_dir or settings.output_dir)
    return root / f"{cfg.name}-seed{cfg.seed}"


def run_pipeline(
    cfg: PipelineConfig,
    base_dir: Optional[Path] = None,
    run_dir: Optional[Path] = None,
    workers: Optional[int] = None,
    resume_dir: Optional[Path] = None,
    cache: Optional[MemoryCache] = None
) -> Tuple[ExitCode, Dict[str, Any]]:
    """
    Run every stage and write the report bundle.

    Args:
        cfg: Validated pipeline configuration
        base_dir: Directory for relative paths in the configuration
        run_dir: Bundle directory (defaults to <output_dir>/<name>-seed<seed>)
        workers: Thread count (defaults to settings)
        resume_dir: Previous run directory to reload certificates from
        cache: Artifact cache to share between runs

    Returns:
        (exit code, bundle description with the run directory and manifest)
    """
    started_at = datetime.now(timezone.utc)
    ctx = RunContext(
        cfg=cfg,
        base_dir=Path(base_dir or "."),
        run_dir=Path(run_dir) if run_dir is not None else default_run_dir(cfg),
        workers=max(1, workers or settings.workers),
        cache=cache if cache is not None else MemoryCache(),
        resume_dir=Path(resume_dir) if resume_dir is not None else None,
    )
    logger.info(f"Running pipeline {cfg.name!r} with seed {cfg.seed}, {ctx.workers} worker(s), output {ctx.run_dir}")
    graph = create_pipeline_graph(ctx, started_at)

    initial_state: PipelineState = {
        "failure": None,
        "comparisons": [],
        "nodes_executed": [],
        "timings": {},
        "cache_hits": {},
    }
    final_state = graph.invoke(initial_state, config={"recursion_limit": 2 * len(STAGE_ORDER) + 4})

    if "exit_code" in final_state:
        code = ExitCode(final_state["exit_code"])
    elif final_state.get("failure"):
        code = ExitCode(final_state["failure"]["exit_code"])
    else:
        code = ExitCode.TOOL_ERROR
    return code, final_state.get("bundle", {})
