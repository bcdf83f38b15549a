"""
Report stage: writes the bundle and settles the exit code. Always last, and
reached directly from any stage that records a failure.
"""
import logging
from datetime import datetime, timezone
from typing import Any, Dict

from mdpcert.errors import ExitCode
from mdpcert.graph.context import RunContext
from mdpcert.graph.state import PipelineState
from mdpcert.nodes.base import StageNode
from mdpcert.observability import metrics
from mdpcert.reports.writer import BundleWriter

logger = logging.getLogger(__name__)


class ReportNode(StageNode):

    NODE_NAME = "report"

    def __init__(self, ctx: RunContext, started_at: datetime = None):
        super().__init__(ctx)
        self.started_at = started_at or datetime.now(timezone.utc)

    def run(self, state: PipelineState) -> Dict[str, Any]:
        failure = state.get("failure")
        exit_code = ExitCode(failure["exit_code"]) if failure else ExitCode.OK
        writer = BundleWriter(self.ctx.run_dir, self.cfg, self.ctx.seed, workers=self.ctx.workers)
        final_state = {**state, "nodes_executed": state.get("nodes_executed", []) + [self.NODE_NAME]}
        bundle = writer.write(final_state, exit_code, self.started_at)
        metrics.pipeline_runs_total.labels(exit_code=str(int(exit_code))).inc()
        if failure:
            logger.info(f"Run finished with {exit_code.name} at stage {failure['stage']}: {failure['reason']}")
        else:
            logger.info("Run finished: all stages completed")
        return {"exit_code": int(exit_code), "bundle": bundle}
