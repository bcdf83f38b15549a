"""
Special functions evaluated in log-space.
"""
import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import binom


def log_binomial_tail(N: int, c: int, eps: float) -> float:
    """
    log of sum_{i=0}^{c-1} C(N, i) eps^i (1 - eps)^(N - i).

    Terms with i > N vanish, so c - 1 > N gives log 1 = 0.

    Args:
        N: Number of trials
        c: Number of leading terms
        eps: Success probability in [0, 1]

    Returns:
        Log tail probability (may be -inf)
    """
    if c < 1:
        return -np.inf
    k = np.arange(min(int(c), int(N) + 1))
    return float(min(logsumexp(binom.logpmf(k, int(N), float(eps))), 0.0))


def log_unit_ball_volume(dims: int) -> float:
    """log of the volume of the Euclidean unit ball in R^dims."""
    return 0.5 * dims * np.log(np.pi) - float(gammaln(0.5 * dims + 1.0))
