"""
Certification stage: Lipschitz constants, eta inverse and the margin test for
every subsystem.
"""
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from mdpcert.certification.certificate import certify
from mdpcert.certification.lipschitz import (
    estimate_lipschitz_bounds,
    linear_lipschitz_inputs,
    lipschitz_constants,
    supply_norm,
)
from mdpcert.errors import ConfigurationError, ExitCode
from mdpcert.graph.state import PipelineState
from mdpcert.models import LipschitzConfig
from mdpcert.nodes.base import StageNode, stage_failure
from mdpcert.reports.reference import compare_with_reported
from mdpcert.systems.linear import LinearSubsystem

logger = logging.getLogger(__name__)


def configured_lipschitz(lip: LipschitzConfig) -> Optional[List[float]]:
    """Constants known from configuration alone, or None in probe mode."""
    if lip.mode == "values":
        if not lip.values:
            raise ConfigurationError("lipschitz.mode 'values' needs at least one value")
        if any(v < 0 for v in lip.values):
            raise ConfigurationError("Lipschitz constants must be >= 0")
        return list(lip.values)
    if lip.mode == "inputs":
        if lip.inputs is None:
            raise ConfigurationError("lipschitz.mode 'inputs' needs 'inputs'")
        return lipschitz_constants(lip.inputs)
    return None


class CertifyNode(StageNode):

    NODE_NAME = "certify"

    def _lipschitz(self, sub, template, solution, sop, qx, seed) -> Tuple[List[float], Optional[str]]:
        """Constants per alpha and the note recording where they came from."""
        constants = configured_lipschitz(self.cfg.lipschitz)
        if constants is not None:
            return constants, None
        P = template.quadratic_form(solution.kappa)
        if P is None:
            if self.cfg.lipschitz.P is None:
                raise ConfigurationError(
                    "probe mode needs lipschitz.P when the template is not a quadratic form"
                )
            P = np.asarray(self.cfg.lipschitz.P, dtype=float)
        s5 = supply_norm(solution.Z)
        if isinstance(sub, LinearSubsystem):
            inputs = linear_lipschitz_inputs(sub, P, sop.alpha_grid, rho=qx.rho, s5=s5)
            note = (
                f"Lipschitz chain from linear model norms: "
                f"|A|={inputs.Y1:.6g} |B|={inputs.Y2:.6g} |E|={inputs.Y3:.6g}"
            )
            return lipschitz_constants(inputs), note
        inputs = estimate_lipschitz_bounds(
            sub, P, sop.alpha_grid, rho=qx.rho, s5=s5,
            probe_count=self.cfg.lipschitz.probe_count, seed=seed,
        )
        return lipschitz_constants(inputs), "Lipschitz bounds probed from samples (non-rigorous)"

    def run(self, state: PipelineState) -> Dict[str, Any]:
        net = state["network"]
        certificates = [None] * net.size
        comparisons = list(state.get("comparisons", []))

        for group in state["groups"]:
            key = group["key"]
            first = group["members"][0]
            sub = net.subsystems[first]
            sop = self.cfg.sop_for(first)
            solution = state["solutions"][key]
            plan = state["sample_plan"][key]
            qx = state["scenario_grids"][key][0]
            constants, note = self._lipschitz(sub, state["templates"][key], solution, sop, qx, group["seed"])
            volume = sub.state_set.volume * sub.disturbance_set.volume

            for index in group["members"]:
                member = net.subsystems[index]
                certificates[index] = certify(
                    solution, constants, sop.eps_per_alpha(), sub.n + sub.p, volume,
                    sop.beta1, sop.beta2,
                    N_required=plan["N_required"], L_required=plan["L_required"],
                    name=member.name,
                )
                if note is not None:
                    certificates[index].notes.append(note)

            if state.get("network_kind") == "room":
                cert = certificates[first]
                comparisons.append(compare_with_reported("eta_inverse", cert.eta_inv[0]))
                comparisons.append(compare_with_reported("lipschitz", max(cert.lipschitz)))
                comparisons.append(compare_with_reported("psi_star", cert.solution.psi_star))
                comparisons.append(compare_with_reported(
                    "margin", cert.margin, note="reported margin is rounded"
                ))

        updates: Dict[str, Any] = {"certificates": certificates, "comparisons": comparisons}
        rejected = [c.name for c in certificates if not c.certified]
        if rejected:
            updates.update(stage_failure(
                self.NODE_NAME, ExitCode.NOT_CERTIFIED,
                f"certification margin positive for {len(rejected)} subsystem(s)",
                subsystems=rejected,
                margins={c.name: c.margin for c in certificates if not c.certified},
            ))
        return updates
