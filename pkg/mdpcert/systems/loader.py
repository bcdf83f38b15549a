"""
Network definitions loaded from configuration.

Schema (JSON):

    {"kind": "room", "room": {...RoomNetworkParams...}}

    {"kind": "linear",
     "subsystems": [{"name", "state_bounds": [[lo...], [hi...]],
                     "disturbance_bounds": [[lo...], [hi...]],
                     "inputs": [[...], ...], "A", "B", "E", "c",
                     "noise_mean", "noise_std"}, ...],
     "coupling": [[...]]  or  "coupling_csv": "path/relative/to/config.csv"}

    {"kind": "python", "factory": "package.module:function", "kwargs": {...}}

The python kind returns an InterconnectionSpec for models only available as
simulators.
"""
import importlib
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from mdpcert.errors import ConfigurationError
from mdpcert.systems.interfaces import BoxSet, FiniteInputSet, NoiseModel
from mdpcert.systems.linear import LinearSubsystem
from mdpcert.systems.network import InterconnectionSpec
from mdpcert.systems.room import RoomNetworkParams, make_room_network

logger = logging.getLogger(__name__)


class LinearSubsystemConfig(BaseModel):
    name: str = "linear"
    state_bounds: List[List[float]]
    disturbance_bounds: List[List[float]]
    inputs: List[List[float]]
    A: List[List[float]]
    B: List[List[float]]
    E: List[List[float]]
    c: Optional[List[float]] = None
    noise_mean: Optional[List[float]] = None
    noise_std: List[float]

    def build(self) -> LinearSubsystem:
        state_set = BoxSet(*self.state_bounds)
        mean = self.noise_mean if self.noise_mean is not None else [0.0] * len(self.noise_std)
        return LinearSubsystem(
            A=self.A, B=self.B, E=self.E, c=self.c,
            state_set=state_set,
            input_set=FiniteInputSet(np.asarray(self.inputs, dtype=float)),
            disturbance_set=BoxSet(*self.disturbance_bounds),
            noise=NoiseModel(kind="gaussian", mean=mean, std=self.noise_std),
            name=self.name,
        )


class NetworkConfig(BaseModel):
    kind: Literal["room", "linear", "python"] = "room"
    room: RoomNetworkParams = Field(default_factory=RoomNetworkParams)
    subsystems: List[LinearSubsystemConfig] = Field(default_factory=list)
    coupling: Optional[List[List[float]]] = None
    coupling_csv: Optional[str] = None
    factory: Optional[str] = None
    kwargs: Dict[str, Any] = Field(default_factory=dict)


def read_coupling_csv(path: Path) -> np.ndarray:
    """Dense coupling block from a comma-separated file (no header)."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"coupling file {path} does not exist")
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))


def _load_factory(reference: str):
    module_name, _, attr = reference.partition(":")
    if not attr:
        raise ConfigurationError(f"factory {reference!r} must look like 'module:function'")
    try:
        return getattr(importlib.import_module(module_name), attr)
    except (ImportError, AttributeError) as exc:
        raise ConfigurationError(f"cannot import factory {reference!r}: {exc}") from exc


def load_network(config: NetworkConfig, base_dir: Optional[Path] = None) -> InterconnectionSpec:
    """
    Build the network described by a NetworkConfig.

    Raises:
        ConfigurationError: missing pieces, unreadable coupling or dimension mismatch
    """
    base_dir = Path(base_dir or ".")
    if config.kind == "room":
        return make_room_network(config.room)

    if config.kind == "python":
        if not config.factory:
            raise ConfigurationError("python networks need a 'factory'")
        net = _load_factory(config.factory)(**config.kwargs)
        if not isinstance(net, InterconnectionSpec):
            raise ConfigurationError(f"factory {config.factory} did not return an InterconnectionSpec")
        return net

    if not config.subsystems:
        raise ConfigurationError("linear networks need at least one subsystem")
    subsystems = tuple(s.build() for s in config.subsystems)
    if config.coupling is not None:
        coupling = np.asarray(config.coupling, dtype=float)
    elif config.coupling_csv is not None:
        coupling = read_coupling_csv(base_dir / config.coupling_csv)
    else:
        raise ConfigurationError("linear networks need 'coupling' or 'coupling_csv'")
    net = InterconnectionSpec(subsystems=subsystems, coupling=coupling)
    logger.info(f"Linear network loaded: {net.size} subsystems, coupling {net.coupling.shape}")
    return net
