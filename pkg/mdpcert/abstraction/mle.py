"""
Maximum-likelihood Gaussian parameter estimation.
"""
from dataclasses import dataclass

import numpy as np

from mdpcert.errors import InsufficientDataError


@dataclass(frozen=True, eq=False)
class MleEstimate:
    mean: np.ndarray
    std: np.ndarray
    sample_count: int


def mle_gaussian(samples) -> MleEstimate:
    """
    Component-wise mean and (N-1)-normalized standard deviation.

    Args:
        samples: Array of shape (N,) or (N, dim)

    Raises:
        InsufficientDataError: fewer than 2 samples
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples.reshape(-1, 1)
    if samples.shape[0] < 2:
        raise InsufficientDataError(f"MLE needs at least 2 samples, got {samples.shape[0]}")
    return MleEstimate(
        mean=samples.mean(axis=0),
        std=samples.std(axis=0, ddof=1),
        sample_count=int(samples.shape[0]),
    )
