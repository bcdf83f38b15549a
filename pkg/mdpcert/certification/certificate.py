"""
Probabilistic certification of a scenario solution.

A solution certifies when

    psi* + max_t L_t * eta^{-1}(eps2_t) <= 0,

and the resulting storage function then holds with confidence
1 - beta1 - beta2.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from mdpcert.certification.geometry import eta_inverse
from mdpcert.errors import PreconditionError, ProvenanceError
from mdpcert.observability import metrics
from mdpcert.scenario.sop import ScenarioSolution

logger = logging.getLogger(__name__)


@dataclass
class StorageCertificate:
    name: str
    solution: ScenarioSolution
    lipschitz: List[float]
    eta_inv: List[float]
    eps1: List[float]
    eps2: List[float]
    margin: float
    beta1: float
    beta2: float
    confidence: float
    certified: bool
    dims: int
    volume: float
    N_required: Optional[int] = None
    L_required: Optional[int] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "solution": self.solution.to_dict(),
            "lipschitz": self.lipschitz,
            "eta_inv": self.eta_inv,
            "eps1": self.eps1,
            "eps2": self.eps2,
            "margin": self.margin,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "confidence": self.confidence,
            "certified": self.certified,
            "dims": self.dims,
            "volume": self.volume,
            "N_required": self.N_required,
            "L_required": self.L_required,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StorageCertificate":
        values = dict(data)
        values["solution"] = ScenarioSolution.from_dict(values["solution"])
        return cls(**values)


def certification_margin(psi_star: float, lipschitz: Sequence[float], eta_inv: Sequence[float]) -> float:
    """psi* + max_t L_t * eta_inv_t."""
    if len(lipschitz) != len(eta_inv):
        raise PreconditionError(f"{len(lipschitz)} Lipschitz constants for {len(eta_inv)} radii")
    return psi_star + max(l * r for l, r in zip(lipschitz, eta_inv))


def certify(
    sol: ScenarioSolution,
    lipschitz: Sequence[float],
    eps2: Sequence[float],
    dims: int,
    volume: float,
    beta1: float,
    beta2: float,
    N_required: Optional[int] = None,
    L_required: Optional[int] = None,
    name: str = "subsystem"
) -> StorageCertificate:
    """
    Apply the margin test to a scenario solution.

    Args:
        sol: Scenario solution
        lipschitz: L_t per alpha grid point (a single value is broadcast)
        eps2: Scenario parameter per alpha grid point (a single value is broadcast)
        dims: n + p of the subsystem
        volume: Volume of X x D
        beta1, beta2: Confidence shares
        N_required, L_required: Counts the solution must have been drawn with

    Raises:
        ProvenanceError: the solution used fewer samples or realizations than required
    """
    if N_required is not None and sol.N_used < N_required:
        raise ProvenanceError(f"{name}: solution used N={sol.N_used} samples, {N_required} required")
    if L_required is not None and sol.L_used < L_required:
        raise ProvenanceError(f"{name}: solution used L={sol.L_used} realizations, {L_required} required")

    lipschitz = [float(v) for v in lipschitz]
    eps2 = [float(v) for v in eps2]
    size = max(len(lipschitz), len(eps2))
    if len(lipschitz) == 1:
        lipschitz = lipschitz * size
    if len(eps2) == 1:
        eps2 = eps2 * size
    if len(lipschitz) != len(eps2):
        raise PreconditionError("lipschitz and eps2 must have matching lengths")

    radii = [eta_inverse(e, dims, volume) for e in eps2]
    eps1 = [l * r for l, r in zip(lipschitz, radii)]
    for t, e1 in enumerate(eps1):
        logger.info(f"{name}: eps1[{t}] = L*eta_inv = {lipschitz[t]:.6g} * {radii[t]:.6g} = {e1:.6g}")

    margin = certification_margin(sol.psi_star, lipschitz, radii)
    certified = margin <= 0.0
    confidence = max(0.0, 1.0 - beta1 - beta2)
    metrics.certification_outcome_total.labels(outcome="certified" if certified else "rejected").inc()
    logger.info(
        f"{name}: psi*={sol.psi_star:.6g} margin={margin:.6g} -> "
        f"{'certified' if certified else 'NOT certified'} with confidence {confidence:.6g}"
    )
    return StorageCertificate(
        name=name,
        solution=sol,
        lipschitz=lipschitz,
        eta_inv=radii,
        eps1=eps1,
        eps2=eps2,
        margin=margin,
        beta1=beta1,
        beta2=beta2,
        confidence=confidence,
        certified=certified,
        dims=dims,
        volume=volume,
        N_required=N_required,
        L_required=L_required,
    )


def write_certificates(certificates: Sequence[StorageCertificate], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps([c.to_dict() for c in certificates], indent=2, sort_keys=True))


def read_certificates(path: Path) -> List[StorageCertificate]:
    """Reload certificates written by write_certificates (used by --resume)."""
    return [StorageCertificate.from_dict(item) for item in json.loads(Path(path).read_text())]
