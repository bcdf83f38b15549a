"""
Compositional construction of a network bisimulation function.

Certified subsystem storage functions compose when

    [M; I]^T Zcmp [M; I] = M^T Z11 M + M^T Z12 + Z21 M + Z22 <= 0

with Z11, Z12, Z22 block-diagonal over the subsystems. The composed function
is V = sum_i S_i with gamma = 1 / sum_i (1 / gamma_i), alpha = max_i alpha_i,
varpi = sum_i varpi_i and confidence 1 - sum_i (beta1_i + beta2_i).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import block_diag

from mdpcert.certification.certificate import StorageCertificate
from mdpcert.config import settings
from mdpcert.errors import ConfigurationError
from mdpcert.numerics.linalg import max_eigen_sym
from mdpcert.scenario.templates import make_template

logger = logging.getLogger(__name__)

ZBlocks = Tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass
class LmiCheck:
    ok: bool
    lambda_max: float
    product: np.ndarray
    z_cmp: np.ndarray


def assemble_zcmp(parts: Sequence[ZBlocks]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Block-diagonal Z11 (sum p), Z12 (sum p x sum n) and Z22 (sum n)."""
    z11, z12, z22 = [], [], []
    for i, (a, b, c) in enumerate(parts):
        a, b, c = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (a, b, c))
        p, n = a.shape[0], c.shape[0]
        if a.shape != (p, p) or c.shape != (n, n) or b.shape != (p, n):
            raise ConfigurationError(
                f"part {i}: Z blocks of shapes {a.shape}, {b.shape}, {c.shape} are inconsistent"
            )
        z11.append(a)
        z12.append(b)
        z22.append(c)
    return block_diag(*z11), block_diag(*z12), block_diag(*z22)


def check_dissipativity_lmi(parts: Sequence[ZBlocks], coupling: np.ndarray, tol: float = None) -> LmiCheck:
    """
    Negative-semidefiniteness of the coupled supply matrix.

    Raises:
        ConfigurationError: block or coupling dimensions disagree
    """
    tol = settings.psd_tolerance if tol is None else tol
    Z11, Z12, Z22 = assemble_zcmp(parts)
    M = np.atleast_2d(np.asarray(coupling, dtype=float))
    if M.shape != (Z11.shape[0], Z22.shape[0]):
        raise ConfigurationError(f"coupling {M.shape} does not match Z blocks ({Z11.shape[0]}, {Z22.shape[0]})")
    product = M.T @ Z11 @ M + M.T @ Z12 + Z12.T @ M + Z22
    product = 0.5 * (product + product.T)
    lam = max_eigen_sym(product)
    z_cmp = np.block([[Z11, Z12], [Z12.T, Z22]])
    return LmiCheck(ok=lam <= tol, lambda_max=lam, product=product, z_cmp=z_cmp)


@dataclass
class BisimulationCertificate:
    parts: List[StorageCertificate]
    gamma: float
    alpha: float
    varpi: float
    confidence: float
    lmi_ok: bool
    lambda_max: float
    z_cmp: np.ndarray
    notes: List[str] = field(default_factory=list)

    def v0(self, x0: np.ndarray, xh0: np.ndarray) -> float:
        """V(x0, xh0) = sum of the part storage functions on stacked states."""
        x0 = np.asarray(x0, dtype=float)
        xh0 = np.asarray(xh0, dtype=float)
        total, offset = 0.0, 0
        for part in self.parts:
            sol = part.solution
            template = make_template(sol.template)
            sl = slice(offset, offset + sol.n)
            total += float(template.value(sol.kappa, x0[..., sl], xh0[..., sl]))
            offset += sol.n
        return total

    def report(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "alpha": self.alpha,
            "varpi": self.varpi,
            "confidence": self.confidence,
            "lmi_ok": self.lmi_ok,
            "lambda_max": self.lambda_max,
            "z_cmp": self.z_cmp.tolist(),
            "parts": [
                {"name": p.name, "dataset_hash": p.solution.dataset_hash, "margin": p.margin,
                 "gamma": p.solution.gamma, "alpha": p.solution.alpha_star, "varpi": p.solution.varpi}
                for p in self.parts
            ],
            "notes": self.notes,
        }


@dataclass
class CompositionRejected:
    reason: str
    lambda_max: float = math.nan
    uncertified: List[str] = field(default_factory=list)


def compose(
    parts: Sequence[StorageCertificate],
    coupling: np.ndarray
) -> Union[BisimulationCertificate, CompositionRejected]:
    """
    Compose certified parts into a network bisimulation function.

    Returns:
        BisimulationCertificate, or CompositionRejected when a part is not
        certified or the LMI fails (carrying lambda_max)
    """
    parts = list(parts)
    if not parts:
        raise ConfigurationError("composition needs at least one part")
    uncertified = [p.name for p in parts if not p.certified]
    if uncertified:
        logger.info(f"Composition refused: uncertified parts {uncertified}")
        return CompositionRejected(reason="uncertified parts", uncertified=uncertified)

    check = check_dissipativity_lmi(
        [(p.solution.Z11, p.solution.Z12, p.solution.Z22) for p in parts], coupling
    )
    if not check.ok:
        logger.info(f"Composition rejected: lambda_max = {check.lambda_max:.6g} > 0")
        return CompositionRejected(reason="dissipativity LMI fails", lambda_max=check.lambda_max)

    gamma = 1.0 / math.fsum(1.0 / p.solution.gamma for p in parts)
    alpha = max(p.solution.alpha_star for p in parts)
    varpi = math.fsum(p.solution.varpi for p in parts)
    confidence = max(0.0, 1.0 - math.fsum(p.beta1 + p.beta2 for p in parts))
    logger.info(
        f"Composed {len(parts)} parts: gamma={gamma:.6g} alpha={alpha:.6g} varpi={varpi:.6g} "
        f"confidence={confidence:.6g} lambda_max={check.lambda_max:.6g}"
    )
    return BisimulationCertificate(
        parts=parts,
        gamma=gamma,
        alpha=alpha,
        varpi=varpi,
        confidence=confidence,
        lmi_ok=True,
        lambda_max=check.lambda_max,
        z_cmp=check.z_cmp,
    )
