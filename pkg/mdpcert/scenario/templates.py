"""
Storage-function templates S(kappa, x, xh) = sum_j kappa_j h_j(x, xh).

Templates are linear in kappa, which keeps the scenario program an LP once
alpha is fixed.
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from mdpcert.errors import ConfigurationError


class SstfTemplate(ABC):
    """Basis of a storage-function template over state pairs in R^n."""

    def __init__(self, n: int):
        if n < 1:
            raise ConfigurationError("template state dimension must be >= 1")
        self.n = int(n)

    @property
    @abstractmethod
    def z(self) -> int:
        """Number of coefficients kappa."""
        pass

    @abstractmethod
    def basis(self, x: np.ndarray, xh: np.ndarray) -> np.ndarray:
        """
        Evaluate every h_j.

        Args:
            x, xh: Broadcast-compatible arrays with trailing axis n

        Returns:
            Array with trailing axis z
        """
        pass

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        pass

    def value(self, kappa: Sequence[float], x: np.ndarray, xh: np.ndarray) -> np.ndarray:
        return self.basis(x, xh) @ np.asarray(kappa, dtype=float)

    def quadratic_form(self, kappa: Sequence[float]) -> Optional[np.ndarray]:
        """P with S = (x - xh)^T P (x - xh) + const, or None if S is not of that form."""
        return None


class PolynomialTemplate(SstfTemplate):
    """
    Componentwise powers of x - xh plus an optional constant.

    Basis order: for each power, each dimension; then the constant.
    """

    def __init__(self, n: int, powers: Tuple[int, ...] = (4, 2), constant: bool = True):
        super().__init__(n)
        if not powers and not constant:
            raise ConfigurationError("template needs at least one basis function")
        if any(k < 1 for k in powers):
            raise ConfigurationError(f"powers must be positive, got {powers}")
        self.powers = tuple(int(k) for k in powers)
        self.constant = bool(constant)

    @property
    def z(self) -> int:
        return len(self.powers) * self.n + int(self.constant)

    def basis(self, x, xh):
        delta = np.asarray(x, dtype=float) - np.asarray(xh, dtype=float)
        columns = [delta ** k for k in self.powers]
        if self.constant:
            columns.append(np.ones(delta.shape[:-1] + (1,)))
        return np.concatenate(columns, axis=-1)

    def quadratic_form(self, kappa):
        if self.powers != (2,):
            return None
        return np.diag(np.asarray(kappa, dtype=float)[:self.n])

    def describe(self):
        return {"kind": "polynomial", "n": self.n, "powers": list(self.powers), "constant": self.constant}


class QuadraticTemplate(SstfTemplate):
    """Full quadratic form (x - xh)^T P (x - xh) (+ constant), P from the upper triangle."""

    def __init__(self, n: int, constant: bool = True):
        super().__init__(n)
        self.constant = bool(constant)
        self._rows, self._cols = np.triu_indices(self.n)

    @property
    def z(self) -> int:
        return self._rows.size + int(self.constant)

    def basis(self, x, xh):
        delta = np.asarray(x, dtype=float) - np.asarray(xh, dtype=float)
        scale = np.where(self._rows == self._cols, 1.0, 2.0)
        columns = [delta[..., self._rows] * delta[..., self._cols] * scale]
        if self.constant:
            columns.append(np.ones(delta.shape[:-1] + (1,)))
        return np.concatenate(columns, axis=-1)

    def quadratic_form(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        P = np.zeros((self.n, self.n))
        P[self._rows, self._cols] = kappa[:self._rows.size]
        return P + np.triu(P, 1).T

    def describe(self):
        return {"kind": "quadratic", "n": self.n, "constant": self.constant}


def make_template(description: Dict[str, Any]) -> SstfTemplate:
    """Build a template from its `describe()` dictionary."""
    kind = description.get("kind", "polynomial")
    if kind == "polynomial":
        return PolynomialTemplate(
            description["n"],
            tuple(description.get("powers", (4, 2))),
            description.get("constant", True),
        )
    if kind == "quadratic":
        return QuadraticTemplate(description["n"], description.get("constant", True))
    raise ConfigurationError(f"unknown template kind {kind!r}")


def supply_rate_size(n: int, p: int) -> int:
    """Number of free entries of the symmetric (p+n) x (p+n) supply matrix Z."""
    k = n + p
    return k * (k + 1) // 2


def decision_variable_count(template: SstfTemplate, n: int, p: int) -> int:
    """gamma, varpi, kappa, the entries of Z and the epigraph variable psi."""
    return 2 + template.z + supply_rate_size(n, p) + 1
