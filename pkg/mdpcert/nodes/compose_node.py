"""
Composition stage: dissipativity LMI over the coupling and the composed
bisimulation function.
"""
import logging
from typing import Any, Dict

from mdpcert.composition.compose import CompositionRejected, compose
from mdpcert.errors import ExitCode
from mdpcert.graph.state import PipelineState
from mdpcert.nodes.base import StageNode, stage_failure
from mdpcert.reports.reference import compare_with_reported

logger = logging.getLogger(__name__)


class ComposeNode(StageNode):

    NODE_NAME = "compose"

    def run(self, state: PipelineState) -> Dict[str, Any]:
        net = state["network"]
        result = compose(state["certificates"], net.coupling)
        if isinstance(result, CompositionRejected):
            updates = stage_failure(
                self.NODE_NAME, ExitCode.COMPOSITION_REJECTED, result.reason,
                lambda_max=result.lambda_max, uncertified=result.uncertified,
            )
            updates["rejection"] = result
            return updates

        comparisons = list(state.get("comparisons", []))
        if state.get("network_kind") == "room":
            comparisons.append(compare_with_reported(
                "gamma_composed", result.gamma,
                note="harmonic-sum formula 1 / sum(1 / gamma_i)",
            ))
            comparisons.append(compare_with_reported("varpi_composed", result.varpi))
            comparisons.append(compare_with_reported("alpha_composed", result.alpha))
            comparisons.append(compare_with_reported("confidence_composed", result.confidence))
            result.notes.extend(
                f"{c['name']}: computed {c['computed']:.6g}, reported {c['reported']:.6g}"
                for c in comparisons[-4:] if not c["matches"]
            )
        return {"composition": result, "comparisons": comparisons}
