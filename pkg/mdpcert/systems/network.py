"""
Interconnected networks of black-box subsystems.

Subsystem i receives the disturbance d_i = (M x)_i, where x is the stacked
state [x_1; ...; x_M] and block-row i of the coupling M has p_i rows.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from mdpcert.errors import ConfigurationError, PreconditionError
from mdpcert.systems.interfaces import BlackBoxSystem, BoxSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepOutcome:
    """Successor state and whether it left the state set (never clamped)."""
    state: np.ndarray
    exited: np.ndarray


def _offsets(sizes: Sequence[int]) -> Tuple[int, ...]:
    return tuple(int(v) for v in np.concatenate([[0], np.cumsum(sizes)]))


@dataclass(frozen=True, eq=False)
class InterconnectionSpec:
    """Subsystems plus the dense coupling matrix of shape (sum p_i, sum n_i)."""
    subsystems: Tuple[BlackBoxSystem, ...]
    coupling: np.ndarray

    def __post_init__(self):
        subsystems = tuple(self.subsystems)
        if not subsystems:
            raise ConfigurationError("a network needs at least one subsystem")
        coupling = np.atleast_2d(np.asarray(self.coupling, dtype=float))
        expected = (sum(s.p for s in subsystems), sum(s.n for s in subsystems))
        if coupling.shape != expected:
            raise ConfigurationError(
                f"coupling matrix has shape {coupling.shape}, subsystem dims require {expected}"
            )
        coupling.setflags(write=False)
        object.__setattr__(self, "subsystems", subsystems)
        object.__setattr__(self, "coupling", coupling)

    @property
    def size(self) -> int:
        return len(self.subsystems)

    @property
    def state_offsets(self) -> Tuple[int, ...]:
        return _offsets([s.n for s in self.subsystems])

    @property
    def disturbance_offsets(self) -> Tuple[int, ...]:
        return _offsets([s.p for s in self.subsystems])

    @property
    def input_offsets(self) -> Tuple[int, ...]:
        return _offsets([s.m for s in self.subsystems])

    @property
    def total_state_dim(self) -> int:
        return self.state_offsets[-1]

    @property
    def state_set(self) -> BoxSet:
        """Product of the subsystem state sets."""
        box = self.subsystems[0].state_set
        for sub in self.subsystems[1:]:
            box = box.product(sub.state_set)
        return box

    def split(self, stacked: np.ndarray, offsets: Sequence[int]) -> List[np.ndarray]:
        """Split the last axis of a stacked vector/batch at the given offsets."""
        return [stacked[..., offsets[i]:offsets[i + 1]] for i in range(self.size)]

    def disturbances(self, x: np.ndarray) -> List[np.ndarray]:
        """Per-subsystem disturbances (M x)_i for stacked states of shape (..., sum n)."""
        d = np.asarray(x, dtype=float) @ self.coupling.T
        return self.split(d, self.disturbance_offsets)

    def step_batch(self, x: np.ndarray, nu: np.ndarray, noise: Sequence[np.ndarray]) -> np.ndarray:
        """
        One network step for a batch.

        Args:
            x: Stacked states, shape (B, sum n)
            nu: Stacked inputs, shape (B, sum m)
            noise: One noise batch per subsystem, shape (B, k_i)

        Returns:
            Stacked successors, shape (B, sum n)
        """
        xs = self.split(x, self.state_offsets)
        nus = self.split(nu, self.input_offsets)
        ds = self.disturbances(x)
        successors = [
            sub.step(xs[i], nus[i], ds[i], noise[i])
            for i, sub in enumerate(self.subsystems)
        ]
        return np.concatenate(successors, axis=1)

    def sample_noise(self, rng: np.random.Generator, size: int) -> List[np.ndarray]:
        """Independent noise draws for every subsystem, in subsystem order."""
        return [sub.noise.sample(rng, size) for sub in self.subsystems]

    def exits(self, x: np.ndarray) -> np.ndarray:
        """Per-subsystem exit flags for stacked states, shape (..., M)."""
        parts = self.split(np.asarray(x, dtype=float), self.state_offsets)
        return np.stack(
            [~sub.state_set.contains(part) for sub, part in zip(self.subsystems, parts)],
            axis=-1
        )


def _require(condition: bool, message: str):
    if not condition:
        raise PreconditionError(message)


def sample_one_step(
    sys: BlackBoxSystem,
    x: Sequence[float],
    nu: Sequence[float],
    d: Sequence[float],
    rng: np.random.Generator
) -> StepOutcome:
    """
    One realization of f(x, nu, d, noise) with a fresh noise draw.

    Raises:
        PreconditionError: x outside X, nu not in U or d outside D
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    _require(x.shape == (sys.n,) and bool(sys.state_set.contains(x)), f"x={x.tolist()} not in the state set")
    _require(sys.input_set.index_of(nu) is not None, f"nu={nu.tolist()} not in the input set")
    _require(d.shape == (sys.p,) and bool(sys.disturbance_set.contains(d)), f"d={d.tolist()} not in the disturbance set")

    noise = sys.noise.sample(rng, 1)
    successor = sys.step(x[None, :], nu[None, :], d[None, :], noise)[0]
    exited = ~sys.state_set.contains(successor)
    if exited:
        logger.debug(f"{sys.name}: successor {successor.tolist()} left the state set")
    return StepOutcome(state=successor, exited=np.asarray(exited))


def interconnect_step(
    net: InterconnectionSpec,
    x: Sequence[float],
    nu: Sequence[float],
    rng: np.random.Generator
) -> StepOutcome:
    """
    One step of the interconnected network.

    The disturbances are d = M x; every subsystem then steps with its own
    independent noise draw.

    Returns:
        StepOutcome with the stacked successor and one exit flag per subsystem
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if x.shape != (net.total_state_dim,):
        raise ConfigurationError(f"stacked state has {x.size} entries, network needs {net.total_state_dim}")
    if nu.shape != (net.input_offsets[-1],):
        raise ConfigurationError(f"stacked input has {nu.size} entries, network needs {net.input_offsets[-1]}")
    for sub, xi, nui in zip(net.subsystems, net.split(x, net.state_offsets), net.split(nu, net.input_offsets)):
        _require(bool(sub.state_set.contains(xi)), f"{sub.name}: state {xi.tolist()} not in its state set")
        _require(sub.input_set.index_of(nui) is not None, f"{sub.name}: input {nui.tolist()} not in its input set")

    noise = net.sample_noise(rng, 1)
    successor = net.step_batch(x[None, :], nu[None, :], noise)[0]
    return StepOutcome(state=successor, exited=net.exits(successor))
