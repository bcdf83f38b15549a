"""
Room-temperature network: the built-in case study.

Each room i evolves as
    x_i+ = a_ii x_i + aleph * (sum of neighbour disturbances) + theta T_c nu_i
           + digamma T_e_i + noise_i,   a_ii = 1 - 2 aleph - digamma - theta nu_i,
in a circular topology (room 0 and room M-1 are neighbours).
"""
import json
import logging
from typing import List, Literal, Union

import numpy as np
from pydantic import BaseModel, Field

from mdpcert.errors import ParameterError
from mdpcert.systems.interfaces import BlackBoxSystem, BoxSet, FiniteInputSet, NoiseModel
from mdpcert.systems.network import InterconnectionSpec

logger = logging.getLogger(__name__)

DEFAULT_INPUTS = (0.0, 0.05, 0.1, 0.15, 0.2)


class RoomNetworkParams(BaseModel):
    """Parameters of the circular room network (defaults are configurable)."""
    M: int = Field(100, description="Number of rooms")
    aleph: float = Field(0.05, description="Thermal factor between adjacent rooms")
    digamma: float = Field(0.1, description="Thermal factor to the outside")
    theta: float = Field(0.1, description="Thermal factor to the cooler")
    T_c: float = Field(5.0, description="Cooler temperature (deg C)")
    T_e: Union[float, List[float]] = Field(-1.0, description="Outside temperature per room (deg C)")
    noise_sigma: float = Field(0.01, description="Per-room gaussian noise standard deviation")
    inputs: List[float] = Field(default_factory=lambda: list(DEFAULT_INPUTS))
    state_bounds: List[float] = Field(default_factory=lambda: [-0.5, 0.5])
    coupling_form: Literal["selector", "adjacency"] = "selector"

    def outside_temperatures(self) -> np.ndarray:
        t_e = np.asarray(self.T_e, dtype=float)
        if t_e.ndim == 0:
            return np.full(self.M, float(t_e))
        if t_e.shape != (self.M,):
            raise ParameterError(f"T_e needs {self.M} entries, got {t_e.size}")
        return t_e

    def diagonal_gains(self) -> np.ndarray:
        """a_ii for every input in the input set."""
        return 1.0 - 2.0 * self.aleph - self.digamma - self.theta * np.asarray(self.inputs, dtype=float)


class RoomSubsystem(BlackBoxSystem):
    """One room; the disturbance vector carries the neighbour temperatures."""

    def __init__(
        self,
        aleph: float,
        digamma: float,
        theta: float,
        T_c: float,
        T_e: float,
        state_set: BoxSet,
        input_set: FiniteInputSet,
        disturbance_set: BoxSet,
        noise: NoiseModel,
        name: str = "room"
    ):
        super().__init__(state_set, input_set, disturbance_set, noise, name)
        self.aleph = float(aleph)
        self.digamma = float(digamma)
        self.theta = float(theta)
        self.T_c = float(T_c)
        self.T_e = float(T_e)

    def step(self, x, nu, d, noise):
        a_ii = 1.0 - 2.0 * self.aleph - self.digamma - self.theta * nu[:, :1]
        return (
            a_ii * x
            + self.aleph * np.sum(d, axis=1, keepdims=True)
            + self.theta * self.T_c * nu[:, :1]
            + self.digamma * self.T_e
            + noise[:, :1]
        )

    def fixed_point(self, nu: float) -> float:
        """Noise-free equilibrium with zero disturbance under constant input."""
        a_ii = 1.0 - 2.0 * self.aleph - self.digamma - self.theta * nu
        return (self.theta * self.T_c * nu + self.digamma * self.T_e) / (1.0 - a_ii)

    def fingerprint(self) -> str:
        return "room:" + json.dumps({
            "aleph": self.aleph, "digamma": self.digamma, "theta": self.theta,
            "T_c": self.T_c, "T_e": self.T_e,
            "X": [self.state_set.lower.tolist(), self.state_set.upper.tolist()],
            "D": [self.disturbance_set.lower.tolist(), self.disturbance_set.upper.tolist()],
            "U": self.input_set.points.tolist(),
            "noise": [self.noise.kind, self.noise.mean.tolist(), self.noise.std.tolist()],
        }, sort_keys=True)


def circulant_coupling(M: int, form: str = "selector") -> np.ndarray:
    """
    Coupling matrix of the circular topology.

    "selector": shape (2M, M); block row i picks (x_{i-1}, x_{i+1}).
    "adjacency": shape (M, M); row i sums both neighbours.
    """
    if form == "selector":
        coupling = np.zeros((2 * M, M))
        for i in range(M):
            coupling[2 * i, (i - 1) % M] = 1.0
            coupling[2 * i + 1, (i + 1) % M] = 1.0
        return coupling
    if form == "adjacency":
        coupling = np.zeros((M, M))
        for i in range(M):
            coupling[i, (i - 1) % M] = 1.0
            coupling[i, (i + 1) % M] = 1.0
        return coupling
    raise ParameterError(f"unknown coupling form {form!r}")


def make_room_network(params: RoomNetworkParams) -> InterconnectionSpec:
    """
    Build the circular room network.

    Args:
        params: Network parameters

    Returns:
        InterconnectionSpec with M room subsystems and the circulant coupling

    Raises:
        ParameterError: M < 3, or a_ii outside (0, 1) for some input
    """
    if params.M < 3:
        raise ParameterError(f"circular topology needs M >= 3, got {params.M}")
    gains = params.diagonal_gains()
    if np.any(gains <= 0.0) or np.any(gains >= 1.0):
        raise ParameterError(f"a_ii must lie in (0, 1) for every input, got {gains.tolist()}")
    if params.noise_sigma < 0:
        raise ParameterError("noise_sigma must be >= 0")

    lo, hi = params.state_bounds
    state_set = BoxSet([lo], [hi])
    if params.coupling_form == "selector":
        disturbance_set = BoxSet([lo, lo], [hi, hi])
    else:
        disturbance_set = BoxSet([2 * lo], [2 * hi])
    input_set = FiniteInputSet(np.asarray(params.inputs, dtype=float).reshape(-1, 1))
    noise = NoiseModel(kind="gaussian", mean=[0.0], std=[params.noise_sigma])

    t_e = params.outside_temperatures()
    rooms = [
        RoomSubsystem(
            aleph=params.aleph,
            digamma=params.digamma,
            theta=params.theta,
            T_c=params.T_c,
            T_e=t_e[i],
            state_set=state_set,
            input_set=input_set,
            disturbance_set=disturbance_set,
            noise=noise,
            name=f"room_{i}"
        )
        for i in range(params.M)
    ]
    coupling = circulant_coupling(params.M, params.coupling_form)
    logger.info(f"Room network built: M={params.M}, coupling {coupling.shape} ({params.coupling_form})")
    return InterconnectionSpec(subsystems=tuple(rooms), coupling=coupling)
