"""
Ball-mass function of the uniform sampling distribution on X x D.

eta(r) is the probability that a uniform sample over a box of the given
volume falls in a ball of radius r/2, i.e. V_dims (r/2)^dims / volume.
"""
import math

from mdpcert.errors import PreconditionError
from mdpcert.numerics.special import log_unit_ball_volume


def _check(dims: int, volume: float):
    if dims < 1:
        raise PreconditionError(f"dims must be >= 1, got {dims}")
    if not volume > 0 or math.isinf(volume):
        raise PreconditionError(f"volume must be finite and positive, got {volume}")


def eta(r: float, dims: int, volume: float) -> float:
    """Ball mass at radius r, clamped to at most 1."""
    _check(dims, volume)
    if r < 0:
        raise PreconditionError("radius must be >= 0")
    if r == 0:
        return 0.0
    log_value = log_unit_ball_volume(dims) + dims * math.log(r / 2.0) - math.log(volume)
    return min(1.0, math.exp(log_value))


def eta_inverse(eps: float, dims: int, volume: float) -> float:
    """Radius r with eta(r) = eps, for eps in [0, 1]."""
    _check(dims, volume)
    if not 0 <= eps <= 1:
        raise PreconditionError(f"eps must lie in [0, 1], got {eps}")
    if eps == 0:
        return 0.0
    return 2.0 * math.exp((math.log(eps) + math.log(volume) - log_unit_ball_volume(dims)) / dims)
