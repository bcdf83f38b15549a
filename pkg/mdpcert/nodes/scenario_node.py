"""
Scenario stage: draws the scenario data with the planned N and L and solves
the sampled storage-function program for every group.
"""
import logging
from typing import Any, Dict

from mdpcert.cache.keys import generate_cache_key
from mdpcert.certification.geometry import eta_inverse
from mdpcert.errors import ExitCode
from mdpcert.graph.state import PipelineState
from mdpcert.nodes.base import StageNode, stage_failure
from mdpcert.nodes.certify_node import configured_lipschitz
from mdpcert.scenario.dataset import draw_scenario_data
from mdpcert.scenario.sop import SopInfeasible, assemble_and_solve_sop, verify_solution
from mdpcert.utils.rng import derive_int_seed

logger = logging.getLogger(__name__)


class ScenarioNode(StageNode):

    NODE_NAME = "scenario"

    def _threshold(self, sub, sop):
        """-max_t L_t eta_inv_t when the constants are known before solving, else None."""
        constants = configured_lipschitz(self.cfg.lipschitz)
        if constants is None:
            return None
        volume = sub.state_set.volume * sub.disturbance_set.volume
        radii = [eta_inverse(e, sub.n + sub.p, volume) for e in sop.eps_per_alpha()]
        if len(constants) == 1:
            constants = constants * len(radii)
        if len(radii) == 1:
            radii = radii * len(constants)
        return -max(l * r for l, r in zip(constants, radii))

    def run(self, state: PipelineState) -> Dict[str, Any]:
        net = state["network"]
        solutions, checks = {}, {}
        for group in state["groups"]:
            key = group["key"]
            first = group["members"][0]
            sub = net.subsystems[first]
            sop = self.cfg.sop_for(first)
            template = state["templates"][key]
            qx, qd = state["scenario_grids"][key]
            plan = state["sample_plan"][key]
            seed = derive_int_seed(group["seed"], "scenario")
            threshold = self._threshold(sub, sop)

            def solve():
                data = draw_scenario_data(sub, plan["N"], plan["L"], qx, qd, seed=seed, workers=self.ctx.workers)
                return data, assemble_and_solve_sop(template, sop, data, threshold, workers=self.ctx.workers)

            cache_key = generate_cache_key(
                "scenario", sub.fingerprint(), sop, template.describe(), qx.describe(), qd.describe(),
                plan["N"], plan["L"], seed, threshold,
            )
            data, result = self.cached(cache_key, solve)
            if isinstance(result, SopInfeasible):
                return stage_failure(
                    self.NODE_NAME, ExitCode.SOP_INFEASIBLE,
                    f"scenario program infeasible for {sub.name}: {result.reason}",
                    group=key, per_alpha=result.per_alpha,
                )
            checks[key] = verify_solution(result, template, data)
            logger.info(
                f"{sub.name}: alpha*={result.alpha_star} psi*={result.psi_star:.6g} "
                f"gamma={result.gamma:.6g} varpi={result.varpi:.6g}, max sampled excess {checks[key]:.3g}"
            )
            solutions[key] = result
        return {"solutions": solutions, "solution_checks": checks}
