"""
Closeness stage: delta table of the composed function from the network
midpoint and its abstract image.
"""
import logging
from typing import Any, Dict

import numpy as np

from mdpcert.closeness.bound import ClosenessQuery, delta_bound, delta_table
from mdpcert.graph.state import PipelineState
from mdpcert.nodes.base import StageNode, per_subsystem
from mdpcert.reports.reference import compare_with_reported

logger = logging.getLogger(__name__)


class ClosenessNode(StageNode):

    NODE_NAME = "closeness"

    def run(self, state: PipelineState) -> Dict[str, Any]:
        net = state["network"]
        composed = state["composition"]
        closeness = self.cfg.closeness

        x0 = net.state_set.midpoint
        grids = per_subsystem(state, "abstraction_grids")
        parts = net.split(x0, net.state_offsets)
        xh0 = np.concatenate([qx.quantize(part)[0] for (qx, _), part in zip(grids, parts)])
        v0 = max(composed.v0(x0, xh0), 0.0)

        horizons = [None if h == "inf" else int(h) for h in closeness.horizons]
        rows = delta_table(composed.gamma, composed.alpha, composed.varpi, v0, closeness.epsilons, horizons)
        for row in rows:
            logger.info(
                f"delta(eps={row['epsilon']}, T={row['horizon']}) = {row['delta']:.6g} "
                f"(raw {row['raw']:.6g}, {row['branch']})"
            )

        comparisons = list(state.get("comparisons", []))
        if state.get("network_kind") == "room":
            bound = delta_bound(ClosenessQuery(
                epsilon=closeness.validation_epsilon, horizon=closeness.validation_horizon, v0=v0,
                gamma=composed.gamma, alpha=composed.alpha, varpi=composed.varpi,
            ))
            comparisons.append(compare_with_reported(
                "closeness_probability", 1.0 - bound.delta,
                note=f"raw bound {bound.raw:.6g} clamped to [0, 1]",
            ))
        return {"v0": v0, "delta_rows": rows, "comparisons": comparisons}
