"""
Interconnection of per-subsystem finite abstractions.

Abstract subsystem i moves to qx_i(f_i(xh_i, nu_i, qd_i((M xh)_i), noise_i)),
so the abstract network is driven by the same black boxes and can share
noise draws with the concrete network.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from mdpcert.abstraction.quantizer import Quantizer
from mdpcert.errors import ConfigurationError
from mdpcert.systems.network import InterconnectionSpec


@dataclass(frozen=True, eq=False)
class ProductAbstraction:
    net: InterconnectionSpec
    state_quantizers: Tuple[Quantizer, ...]
    disturbance_quantizers: Tuple[Quantizer, ...]

    def __post_init__(self):
        qxs = tuple(self.state_quantizers)
        qds = tuple(self.disturbance_quantizers)
        if len(qxs) != self.net.size or len(qds) != self.net.size:
            raise ConfigurationError("one state and one disturbance quantizer per subsystem are required")
        for sub, qx, qd in zip(self.net.subsystems, qxs, qds):
            if qx.dim != sub.n or qd.dim != sub.p:
                raise ConfigurationError(f"{sub.name}: quantizer dimensions do not match the subsystem")
        object.__setattr__(self, "state_quantizers", qxs)
        object.__setattr__(self, "disturbance_quantizers", qds)

    def quantize_states(self, x: np.ndarray) -> np.ndarray:
        """Quantize stacked states subsystem by subsystem."""
        parts = self.net.split(np.asarray(x, dtype=float), self.net.state_offsets)
        return np.concatenate([q.quantize(p)[0] for q, p in zip(self.state_quantizers, parts)], axis=-1)

    def step_batch(self, xh: np.ndarray, nu: np.ndarray, noise: Sequence[np.ndarray]) -> np.ndarray:
        """
        One abstract network step.

        Args:
            xh: Stacked abstract states (grid centers), shape (B, sum n)
            nu: Stacked inputs, shape (B, sum m)
            noise: One noise batch per subsystem

        Returns:
            Stacked abstract successors (grid centers)
        """
        xs = self.net.split(xh, self.net.state_offsets)
        nus = self.net.split(nu, self.net.input_offsets)
        ds = self.net.disturbances(xh)
        successors: List[np.ndarray] = []
        for i, sub in enumerate(self.net.subsystems):
            dh = self.disturbance_quantizers[i].quantize(ds[i])[0]
            raw = sub.step(xs[i], nus[i], dh, noise[i])
            successors.append(self.state_quantizers[i].quantize(raw)[0])
        return np.concatenate(successors, axis=1)
