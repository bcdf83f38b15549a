"""
Lipschitz constants of the sampled constraint functions.

Both chains assume the storage function is bounded by a quadratic form
(x - xh)^T P (x - xh). The first branch is shared:

    L1 = 4 s1 (lambda_min(P) + lambda_max(P))

and the reported constant for grid point alpha_t is max(L1, L2_t).
"""
import logging
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from mdpcert.errors import LipschitzInputError, PreconditionError
from mdpcert.numerics.linalg import max_eigen_sym, min_eigen_sym, spectral_norm
from mdpcert.systems.interfaces import BlackBoxSystem
from mdpcert.systems.linear import LinearSubsystem
from mdpcert.utils.rng import derive_rng

logger = logging.getLogger(__name__)

PROBE_INFLATION = 1.25
FD_STEP = 1e-6


class LipschitzInputs(BaseModel):
    kind: Literal["linear", "nonlinear"] = "nonlinear"
    P: List[List[float]]
    # linear: ||A||, ||B||, ||E||
    Y1: float = 0.0
    Y2: float = 0.0
    Y3: float = 0.0
    # nonlinear: ||f||, ||df/dx||, ||df/dd||
    Yf: float = 0.0
    Yx: float = 0.0
    Yd: float = 0.0
    s1: float = 0.0
    s2: float = 0.0
    s3: float = 0.0
    s4: float = 0.0
    s5: float = 0.0
    rho: float = 0.0
    alpha_grid: List[float] = Field(default_factory=lambda: [0.99])
    rigorous: bool = True
    source: str = "user"


def _check(inputs: LipschitzInputs):
    bounds = [inputs.Y1, inputs.Y2, inputs.Y3, inputs.Yf, inputs.Yx, inputs.Yd,
              inputs.s1, inputs.s2, inputs.s3, inputs.s4, inputs.s5, inputs.rho]
    if any(b < 0 for b in bounds):
        raise LipschitzInputError("all norm bounds must be >= 0")
    P = np.asarray(inputs.P, dtype=float)
    try:
        lam_min, lam_max = min_eigen_sym(P), max_eigen_sym(P)
    except PreconditionError as exc:
        raise LipschitzInputError(f"P must be symmetric: {exc}") from exc
    if lam_min <= 0:
        raise LipschitzInputError(f"P must be positive-definite (lambda_min = {lam_min:.3g})")
    return lam_min, lam_max


def lipschitz_linear(inputs: LipschitzInputs) -> List[float]:
    """Constants for linear dynamics x+ = A x + B nu + E d + noise, one per alpha."""
    lam_min, lam_max = _check(inputs)
    Y1, Y2, Y3 = inputs.Y1, inputs.Y2, inputs.Y3
    s1, s2, s3, rho = inputs.s1, inputs.s2, inputs.s3, inputs.rho
    first = 4.0 * s1 * (lam_min + lam_max)
    drift = (
        2 * Y1 ** 2 * s1 + 2 * Y1 * Y2 * s2 + 2 * Y1 * Y3 * s3 + Y1 * rho + Y3 * rho
        + 2 * Y3 ** 2 * s3 + 2 * Y3 * Y2 * s2 + 2 * Y3 * Y1 * s1
    )
    return [
        max(first, 2.0 * lam_max * (drift + 2 * s1 * a) + 2 * inputs.s4 * inputs.s5)
        for a in inputs.alpha_grid
    ]


def lipschitz_nonlinear(inputs: LipschitzInputs) -> List[float]:
    """Constants for general smooth dynamics with bounded f and derivatives, one per alpha."""
    lam_min, lam_max = _check(inputs)
    first = 4.0 * inputs.s1 * (lam_min + lam_max)
    drift = (
        2 * inputs.Yf * inputs.Yx + inputs.Yx * inputs.rho
        + 2 * inputs.Yf * inputs.Yd + inputs.Yd * inputs.rho
    )
    return [
        max(first, 2.0 * lam_max * (drift + 2 * inputs.s1 * a) + 2 * inputs.s4 * inputs.s5)
        for a in inputs.alpha_grid
    ]


def lipschitz_constants(inputs: LipschitzInputs) -> List[float]:
    if inputs.kind == "linear":
        return lipschitz_linear(inputs)
    return lipschitz_nonlinear(inputs)


def _max_corner_norm(lower: np.ndarray, upper: np.ndarray) -> float:
    return float(np.linalg.norm(np.maximum(np.abs(lower), np.abs(upper))))


def estimate_lipschitz_bounds(
    sys: BlackBoxSystem,
    P,
    alpha_grid: List[float],
    rho: float,
    s5: float,
    probe_count: int = 1000,
    seed: int = 0,
    inflation: float = PROBE_INFLATION
) -> LipschitzInputs:
    """
    Non-rigorous bounds for a black box: max over a uniform probe batch with
    zero noise, derivatives by central differences, inflated by `inflation`.

    Set-geometric quantities (s1, s2, s3, s4) are exact for the declared boxes.
    """
    if probe_count < 1:
        raise PreconditionError("probe_count must be >= 1")
    rng = derive_rng(seed, "lipschitz-probe", sys.fingerprint())
    x = sys.state_set.sample_uniform(rng, probe_count)
    d = sys.disturbance_set.sample_uniform(rng, probe_count)
    u_idx = rng.integers(0, sys.input_set.size, size=probe_count)
    nu = sys.input_set.points[u_idx]
    zero = sys.noise.zeros(probe_count)

    f0 = sys.step(x, nu, d, zero)
    Yf = float(np.max(np.linalg.norm(f0, axis=1)))

    def jacobian_norms(points: np.ndarray, wrt_state: bool) -> float:
        width = points.shape[1]
        columns = []
        for k in range(width):
            step = np.zeros(width)
            step[k] = FD_STEP
            if wrt_state:
                plus, minus = sys.step(x + step, nu, d, zero), sys.step(x - step, nu, d, zero)
            else:
                plus, minus = sys.step(x, nu, d + step, zero), sys.step(x, nu, d - step, zero)
            columns.append((plus - minus) / (2 * FD_STEP))
        jac = np.stack(columns, axis=-1)
        return max(spectral_norm(j) for j in jac)

    Yx = jacobian_norms(x, True)
    Yd = jacobian_norms(d, False)
    s4 = float(np.linalg.norm(np.concatenate([sys.disturbance_set.widths, sys.state_set.widths])))
    inputs = LipschitzInputs(
        kind="nonlinear",
        P=np.asarray(P, dtype=float).tolist(),
        Yf=inflation * Yf,
        Yx=inflation * Yx,
        Yd=inflation * Yd,
        s1=_max_corner_norm(sys.state_set.lower, sys.state_set.upper),
        s2=float(np.max(np.linalg.norm(sys.input_set.points, axis=1))),
        s3=_max_corner_norm(sys.disturbance_set.lower, sys.disturbance_set.upper),
        s4=s4,
        s5=float(s5),
        rho=float(rho),
        alpha_grid=list(alpha_grid),
        rigorous=False,
        source=f"probe batch of {probe_count}, inflated x{inflation}",
    )
    logger.info(
        f"{sys.name}: probed bounds (non-rigorous) Yf={inputs.Yf:.4g} Yx={inputs.Yx:.4g} "
        f"Yd={inputs.Yd:.4g} s1={inputs.s1:.4g} s4={inputs.s4:.4g}"
    )
    return inputs


def linear_lipschitz_inputs(sys: LinearSubsystem, P, alpha_grid: List[float], rho: float, s5: float) -> LipschitzInputs:
    """Exact inputs for known linear dynamics."""
    Y1, Y2, Y3 = sys.norms()
    state_set, disturbance_set = sys.state_set, sys.disturbance_set
    return LipschitzInputs(
        kind="linear",
        P=np.asarray(P, dtype=float).tolist(),
        Y1=Y1,
        Y2=Y2,
        Y3=Y3,
        s1=_max_corner_norm(state_set.lower, state_set.upper),
        s2=float(np.max(np.linalg.norm(sys.input_set.points, axis=1))),
        s3=_max_corner_norm(disturbance_set.lower, disturbance_set.upper),
        s4=float(np.linalg.norm(np.concatenate([disturbance_set.widths, state_set.widths]))),
        s5=float(s5),
        rho=float(rho),
        alpha_grid=list(alpha_grid),
        source="linear model norms",
    )


def supply_norm(Z: Optional[np.ndarray]) -> float:
    """s5 = ||Z|| (spectral norm)."""
    return 0.0 if Z is None else spectral_norm(Z)
