"""
Sample-size laws: scenario count N from the binomial tail, and Chebyshev
realization count L.
"""
import logging
import math
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from mdpcert.errors import PreconditionError, UnboundedSampleSizeError
from mdpcert.numerics.special import log_binomial_tail

logger = logging.getLogger(__name__)

MAX_SAMPLE_COUNT = 10 ** 9
REALIZATION_DECIMALS = 9


def _broadcast_eps(eps2: Sequence[float], l: int) -> np.ndarray:
    eps = np.atleast_1d(np.asarray(eps2, dtype=float))
    if eps.size == 1 and l > 1:
        eps = np.full(l, float(eps[0]))
    if eps.size != l:
        raise PreconditionError(f"{eps.size} scenario parameters for an alpha grid of size {l}")
    if np.any(eps < 0) or np.any(eps > 1):
        raise PreconditionError("scenario parameters must lie in [0, 1]")
    return eps


def _log_total(N: int, eps: np.ndarray, c: int) -> float:
    return float(logsumexp([log_binomial_tail(N, c, e) for e in eps]))


def required_sample_count(eps2: Sequence[float], beta2: float, c: int, l: int = 1) -> int:
    """
    Smallest N with sum_t sum_{i<c} C(N,i) eps_t^i (1-eps_t)^(N-i) <= beta2.

    Args:
        eps2: Scenario parameter per alpha grid point (a single value is broadcast)
        beta2: Confidence share
        c: Decision-variable count
        l: Alpha grid size

    Raises:
        UnboundedSampleSizeError: no finite N exists (zero eps terms alone exceed beta2)
    """
    if c < 1 or l < 1:
        raise PreconditionError("c and l must be >= 1")
    if not 0 < beta2:
        raise PreconditionError("beta2 must be positive")
    eps = _broadcast_eps(eps2, l)

    # every tail equals 1 at N = 0
    if beta2 >= l:
        return 0

    zero_terms = int(np.sum(eps == 0))
    positive = eps[eps > 0]
    if zero_terms >= beta2 or positive.size == 0:
        raise UnboundedSampleSizeError(
            f"{zero_terms} zero scenario parameters keep the tail sum above beta2={beta2}"
        )
    log_budget = math.log(beta2 - zero_terms)

    def meets(N: int) -> bool:
        return _log_total(N, positive, c) <= log_budget

    # N = 0 never meets the budget here since beta2 < l
    lo, hi = 0, max(1, c)
    while not meets(hi):
        lo, hi = hi, hi * 2
        if hi > MAX_SAMPLE_COUNT:
            raise UnboundedSampleSizeError(f"sample count exceeds {MAX_SAMPLE_COUNT}")
    # invariant: meets(hi), not meets(lo)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if meets(mid):
            hi = mid
        else:
            lo = mid
    return hi


def required_realizations(variance_bound: float, beta1: float, mu: float) -> int:
    """
    Chebyshev realization count L = ceil(C / (beta1 mu^2)), at least 1.

    Raises:
        PreconditionError: mu = 0 (infinitely many realizations) or invalid shares
    """
    if mu <= 0:
        raise PreconditionError("mu must be positive; mu = 0 needs infinitely many realizations")
    if not 0 < beta1 <= 1:
        raise PreconditionError("beta1 must lie in (0, 1]")
    if variance_bound < 0:
        raise PreconditionError("variance bound must be >= 0")
    ratio = round(variance_bound / (beta1 * mu * mu), REALIZATION_DECIMALS)
    return max(1, int(math.ceil(ratio)))
