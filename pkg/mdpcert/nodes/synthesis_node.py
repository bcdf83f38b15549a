"""
Synthesis stage: safety policies on the finite abstractions, checked by a
self-rollout of each abstraction from the cell of its state-set midpoint.
"""
import logging
from typing import Any, Dict

from mdpcert.cache.keys import generate_cache_key
from mdpcert.graph.state import PipelineState
from mdpcert.nodes.base import StageNode
from mdpcert.synthesis.safety import rollout_finite_mdp, synthesize_safety
from mdpcert.utils.rng import derive_int_seed

logger = logging.getLogger(__name__)


class SynthesisNode(StageNode):

    NODE_NAME = "synthesis"

    def run(self, state: PipelineState) -> Dict[str, Any]:
        net = state["network"]
        policies, self_rollouts = {}, {}
        trials = self.cfg.rollout.self_rollout_trials
        for group in state["groups"]:
            key = group["key"]
            sub = net.subsystems[group["members"][0]]
            mdp = state["mdps"][key]
            spec = self.cfg.safety.spec_for(sub)
            cache_key = generate_cache_key(
                "policy", mdp.provenance_hash(), spec.safe_set.lower, spec.safe_set.upper, spec.horizon
            )
            policy = self.cached(cache_key, lambda: synthesize_safety(mdp, spec))
            policies[key] = policy

            start = int(mdp.qx.index(sub.state_set.midpoint)[0])
            record = {"start_cell": start, "value": float(policy.values[0, start])}
            if trials > 0:
                result = rollout_finite_mdp(
                    mdp, policy, spec, start, trials, derive_int_seed(group["seed"], "self-rollout"),
                    confidence=self.cfg.confidence_level,
                )
                lo, hi = result.interval
                record.update(result.summary())
                record["value_in_interval"] = bool(lo <= record["value"] <= hi)
                logger.info(
                    f"{sub.name}: V0={record['value']:.4g}, self-rollout {result.frequency:.4g} "
                    f"(CP {lo:.4g}..{hi:.4g})"
                )
            self_rollouts[key] = record
        return {"policies": policies, "self_rollouts": self_rollouts}
