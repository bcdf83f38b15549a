"""
Validation stage: paired Monte Carlo check of the closeness bound and the
closed-loop rollout of the refined policies on the network.
"""
import logging
from typing import Any, Dict

from mdpcert.abstraction.product import ProductAbstraction
from mdpcert.closeness.bound import ClosenessQuery, delta_bound, half_width
from mdpcert.closeness.validation import empirical_violation
from mdpcert.graph.state import PipelineState
from mdpcert.nodes.base import StageNode, per_subsystem
from mdpcert.synthesis.refinement import refine_and_rollout

logger = logging.getLogger(__name__)


class ValidationNode(StageNode):

    NODE_NAME = "validation"

    def run(self, state: PipelineState) -> Dict[str, Any]:
        net = state["network"]
        cfg = self.cfg
        grids = per_subsystem(state, "abstraction_grids")
        policies = per_subsystem(state, "policies")
        updates: Dict[str, Any] = {}

        if cfg.closeness.validation_trials > 0:
            product = ProductAbstraction(net, tuple(g[0] for g in grids), tuple(g[1] for g in grids))
            result = empirical_violation(
                product, policies, cfg.closeness.validation_epsilon, cfg.closeness.validation_horizon,
                cfg.closeness.validation_trials, cfg.seed, confidence=cfg.confidence_level,
            )
            composed = state.get("composition")
            if composed is not None:
                bound = delta_bound(ClosenessQuery(
                    epsilon=result.epsilon, horizon=result.horizon, v0=state.get("v0", 0.0),
                    gamma=composed.gamma, alpha=composed.alpha, varpi=composed.varpi,
                ))
                result.delta_bound = bound.delta
                if result.frequency > bound.delta + half_width(result.interval):
                    logger.warning(
                        f"Empirical violation rate {result.frequency:.4g} exceeds the bound "
                        f"{bound.delta:.4g} beyond the sampling margin"
                    )
            updates["validation"] = result

        if cfg.rollout.trials > 0:
            specs = [cfg.safety.spec_for(sub) for sub in net.subsystems]
            updates["rollout"] = refine_and_rollout(
                net, policies, specs, cfg.rollout.trials, cfg.seed,
                record=cfg.rollout.record, confidence=cfg.confidence_level,
            )
        return updates
