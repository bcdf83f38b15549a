"""
Abstraction stage: finite-MDP kernel estimation per subsystem group.
"""
import logging
from typing import Any, Dict

from mdpcert.abstraction.kernel import estimate_kernel
from mdpcert.cache.keys import generate_cache_key
from mdpcert.graph.state import PipelineState
from mdpcert.nodes.base import StageNode
from mdpcert.utils.rng import derive_int_seed

logger = logging.getLogger(__name__)


class AbstractionNode(StageNode):

    NODE_NAME = "abstraction"

    def run(self, state: PipelineState) -> Dict[str, Any]:
        net = state["network"]
        kernel = self.cfg.kernel
        mdps = {}
        for group in state["groups"]:
            sub = net.subsystems[group["members"][0]]
            qx, qd = state["abstraction_grids"][group["key"]]
            seed = derive_int_seed(group["seed"], "kernel")
            cache_key = generate_cache_key(
                "kernel", sub.fingerprint(), qx.describe(), qd.describe(), kernel, seed
            )
            mdps[group["key"]] = self.cached(
                cache_key,
                lambda: estimate_kernel(
                    sub, qx, qd, kernel.samples_per_cell, seed, kernel.mode, workers=self.ctx.workers
                ),
            )
        return {"mdps": mdps}
