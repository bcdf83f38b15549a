"""
Dense symmetric linear algebra helpers.
"""
import numpy as np

from mdpcert.config import settings
from mdpcert.errors import PreconditionError


def _check_symmetric(A: np.ndarray, tol: float) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise PreconditionError(f"matrix must be square, got {A.shape}")
    asymmetry = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asymmetry > tol:
        raise PreconditionError(f"matrix is not symmetric (max asymmetry {asymmetry:.3e})")
    return 0.5 * (A + A.T)


def max_eigen_sym(A: np.ndarray, tol: float = None) -> float:
    """
    Largest eigenvalue of a symmetric matrix.

    Raises:
        PreconditionError: A is not square or asymmetry exceeds tol
    """
    A = _check_symmetric(A, settings.symmetry_tolerance if tol is None else tol)
    return float(np.linalg.eigvalsh(A)[-1])


def min_eigen_sym(A: np.ndarray, tol: float = None) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    A = _check_symmetric(A, settings.symmetry_tolerance if tol is None else tol)
    return float(np.linalg.eigvalsh(A)[0])


def spectral_norm(A: np.ndarray) -> float:
    """Induced 2-norm (largest singular value)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))
