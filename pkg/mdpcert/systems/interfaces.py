"""
Black-box stochastic control system interface.

Certification code depends on this abstraction only: a one-step sampler
x+ = f(x, nu, d, noise) together with its declared state, input and
disturbance sets. Implementations may wrap a known model (room, linear) or an
arbitrary simulator.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from mdpcert.errors import ParameterError, PreconditionError

CONTAINMENT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BoxSet:
    """Axis-aligned hyper-rectangle {z : lower <= z <= upper}."""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
            raise ParameterError(f"box bounds must be equal-length vectors, got {lower.shape} and {upper.shape}")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ParameterError("box bounds must be finite")
        if np.any(upper <= lower):
            raise ParameterError(f"box needs lower < upper in every dimension: {lower} / {upper}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, points: np.ndarray, tol: float = CONTAINMENT_TOL) -> np.ndarray:
        """Membership test over the last axis; returns a bool per point."""
        points = np.asarray(points, dtype=float)
        inside = (points >= self.lower - tol) & (points <= self.upper + tol)
        return np.all(inside, axis=-1)

    def sample_uniform(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """size i.i.d. uniform points, shape (size, dim)."""
        return rng.uniform(self.lower, self.upper, size=(size, self.dim))

    def product(self, other: "BoxSet") -> "BoxSet":
        """Cartesian product self x other."""
        return BoxSet(np.concatenate([self.lower, other.lower]), np.concatenate([self.upper, other.upper]))


@dataclass(frozen=True, eq=False)
class FiniteInputSet:
    """Finite input alphabet U = {nu_1, ..., nu_m}, each a vector in R^mbar."""
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or points.shape[0] == 0:
            raise ParameterError("input set must be a nonempty list of vectors")
        if len({tuple(p) for p in points.tolist()}) != points.shape[0]:
            raise ParameterError("input points must be pairwise distinct")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def index_of(self, nu: Sequence[float], tol: float = CONTAINMENT_TOL) -> Optional[int]:
        """Index of nu in the set, or None."""
        nu = np.atleast_1d(np.asarray(nu, dtype=float))
        matches = np.flatnonzero(np.all(np.abs(self.points - nu) <= tol, axis=1))
        return int(matches[0]) if matches.size else None


NoiseSampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """
    i.i.d. noise source.

    kind "gaussian" draws N(mean, diag(std**2)); kind "custom" delegates to a
    seeded sampler callback returning an array of shape (size, dim).
    """
    kind: str = "gaussian"
    mean: np.ndarray = field(default_factory=lambda: np.zeros(1))
    std: np.ndarray = field(default_factory=lambda: np.zeros(1))
    seed: int = 0
    sampler: Optional[NoiseSampler] = None

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        std = np.atleast_1d(np.asarray(self.std, dtype=float))
        if self.kind not in ("gaussian", "custom"):
            raise ParameterError(f"unknown noise kind {self.kind!r}")
        if self.kind == "custom" and self.sampler is None:
            raise ParameterError("custom noise needs a sampler callback")
        if mean.shape != std.shape:
            raise ParameterError("noise mean and std must have the same length")
        if np.any(std < 0):
            raise ParameterError("noise standard deviations must be >= 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def dim(self) -> int:
        return int(self.mean.size)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """size i.i.d. draws, shape (size, dim)."""
        if self.kind == "custom":
            draws = np.asarray(self.sampler(rng, size), dtype=float).reshape(size, -1)
            if draws.shape[1] != self.dim:
                raise PreconditionError(f"custom sampler returned dim {draws.shape[1]}, expected {self.dim}")
            return draws
        return self.mean + self.std * rng.standard_normal((size, self.dim))

    def zeros(self, size: int) -> np.ndarray:
        """A batch of zero draws (noise switched off)."""
        return np.zeros((size, self.dim))


class BlackBoxSystem(ABC):
    """
    Opaque discrete-time stochastic control subsystem.

    The only access to the dynamics is `step`, which is deterministic given
    the noise draw and vectorized over a leading batch axis. Instances are
    immutable after construction and may be shared across workers.
    """

    def __init__(
        self,
        state_set: BoxSet,
        input_set: FiniteInputSet,
        disturbance_set: BoxSet,
        noise: NoiseModel,
        name: str = "subsystem"
    ):
        self.state_set = state_set
        self.input_set = input_set
        self.disturbance_set = disturbance_set
        self.noise = noise
        self.name = name

    @property
    def n(self) -> int:
        return self.state_set.dim

    @property
    def p(self) -> int:
        return self.disturbance_set.dim

    @property
    def m(self) -> int:
        return self.input_set.dim

    @abstractmethod
    def step(self, x: np.ndarray, nu: np.ndarray, d: np.ndarray, noise: np.ndarray) -> np.ndarray:
        """
        Evaluate f for a batch.

        Args:
            x: States, shape (B, n)
            nu: Inputs, shape (B, m)
            d: Disturbances, shape (B, p)
            noise: Noise draws, shape (B, noise.dim)

        Returns:
            Successor states, shape (B, n); not clamped to the state set
        """
        pass

    def fingerprint(self) -> str:
        """
        Identity used for artifact reuse. Two systems with equal fingerprints
        must have identical dynamics and sets; the default is unique per object.
        """
        return f"{type(self).__name__}:{id(self)}"


class CallableSystem(BlackBoxSystem):
    """Black box around a user-supplied vectorized step callable."""

    def __init__(
        self,
        step_fn: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray],
        state_set: BoxSet,
        input_set: FiniteInputSet,
        disturbance_set: BoxSet,
        noise: NoiseModel,
        name: str = "callable",
        fingerprint: Optional[str] = None
    ):
        super().__init__(state_set, input_set, disturbance_set, noise, name)
        self._step_fn = step_fn
        self._fingerprint = fingerprint

    def step(self, x, nu, d, noise):
        return np.asarray(self._step_fn(x, nu, d, noise), dtype=float).reshape(x.shape[0], self.n)

    def fingerprint(self) -> str:
        return self._fingerprint or super().fingerprint()
