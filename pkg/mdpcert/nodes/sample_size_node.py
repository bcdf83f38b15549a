"""
Sample-size stage: scenario count N from the binomial tail law and
realization count L from the Chebyshev bound, per subsystem group.

When no variance bound is configured, a pilot program on a small batch
provides kappa and the bound is 1.5x the largest pilot sample variance.
"""
import logging
from typing import Any, Dict

from mdpcert.cache.keys import generate_cache_key
from mdpcert.errors import ExitCode
from mdpcert.graph.state import PipelineState
from mdpcert.nodes.base import StageNode, stage_failure
from mdpcert.reports.reference import compare_with_reported
from mdpcert.scenario.dataset import draw_scenario_data
from mdpcert.scenario.sample_size import required_realizations, required_sample_count
from mdpcert.scenario.sop import SopInfeasible, assemble_and_solve_sop, estimate_variance_bound
from mdpcert.scenario.templates import decision_variable_count
from mdpcert.utils.rng import derive_int_seed

logger = logging.getLogger(__name__)


class SampleSizeNode(StageNode):

    NODE_NAME = "sample_size"

    def _pilot_variance(self, sub, template, sop, grids, seed):
        pilot = draw_scenario_data(
            sub, sop.pilot_samples, sop.pilot_realizations, *grids,
            seed=derive_int_seed(seed, "pilot"), workers=self.ctx.workers,
        )
        result = assemble_and_solve_sop(template, sop, pilot, workers=self.ctx.workers)
        if isinstance(result, SopInfeasible):
            return result
        return estimate_variance_bound(template, result.kappa, pilot, sop.variance_inflation)

    def run(self, state: PipelineState) -> Dict[str, Any]:
        net = state["network"]
        plan: Dict[str, Dict[str, Any]] = {}
        comparisons = list(state.get("comparisons", []))

        for group in state["groups"]:
            key = group["key"]
            first = group["members"][0]
            sub = net.subsystems[first]
            sop = self.cfg.sop_for(first)
            template = state["templates"][key]
            c = decision_variable_count(template, sub.n, sub.p)
            eps = sop.eps_per_alpha()
            N_required = required_sample_count(eps, sop.beta2, c, len(sop.alpha_grid))
            N = N_required if sop.sample_count is None else sop.sample_count
            logger.info(f"{sub.name}: c={c}, N required {N_required}, N used {N}")
            if N == 0:
                return stage_failure(
                    self.NODE_NAME, ExitCode.INSUFFICIENT_DATA,
                    f"insufficient scenario data: N = 0 for {sub.name}",
                    group=key, beta2=sop.beta2, c=c,
                )

            variance_bound = sop.variance_bound
            if variance_bound is None and sop.realizations is None:
                cache_key = generate_cache_key(
                    "pilot", sub.fingerprint(), sop, template.describe(),
                    state["scenario_grids"][key][0].describe(), state["scenario_grids"][key][1].describe(),
                    group["seed"],
                )
                variance_bound = self.cached(
                    cache_key,
                    lambda: self._pilot_variance(sub, template, sop, state["scenario_grids"][key], group["seed"]),
                )
                if isinstance(variance_bound, SopInfeasible):
                    return stage_failure(
                        self.NODE_NAME, ExitCode.SOP_INFEASIBLE,
                        f"pilot program infeasible for {sub.name}; configure sop.variance_bound",
                        group=key, per_alpha=variance_bound.per_alpha,
                    )

            L_required = None
            if variance_bound is not None:
                L_required = required_realizations(variance_bound, sop.beta1, sop.mu)
            L = sop.realizations if sop.realizations is not None else L_required
            logger.info(f"{sub.name}: variance bound {variance_bound}, L required {L_required}, L used {L}")

            plan[key] = {
                "c": c, "N": N, "L": L, "N_required": N_required, "L_required": L_required,
                "variance_bound": variance_bound,
            }
            if state.get("network_kind") == "room":
                comparisons.append(compare_with_reported(
                    "sample_count", N_required, rel_tol=0.0, abs_tol=0.5,
                    note=f"template decision-variable count c={c}",
                ))
                if L_required is not None:
                    comparisons.append(compare_with_reported(
                        "realizations", L_required, rel_tol=0.0, abs_tol=0.5,
                        note=f"variance bound {variance_bound:.6g}",
                    ))

        return {"sample_plan": plan, "comparisons": comparisons}
