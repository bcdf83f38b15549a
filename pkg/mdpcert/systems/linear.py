"""
Linear subsystems x+ = A x + B nu + E d + c + noise.
"""
import json

import numpy as np

from mdpcert.errors import ParameterError
from mdpcert.numerics.linalg import spectral_norm
from mdpcert.systems.interfaces import BlackBoxSystem, BoxSet, FiniteInputSet, NoiseModel


class LinearSubsystem(BlackBoxSystem):

    def __init__(
        self,
        A,
        B,
        E,
        state_set: BoxSet,
        input_set: FiniteInputSet,
        disturbance_set: BoxSet,
        noise: NoiseModel,
        c=None,
        name: str = "linear"
    ):
        super().__init__(state_set, input_set, disturbance_set, noise, name)
        n, m, p = state_set.dim, input_set.dim, disturbance_set.dim
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        self.E = np.atleast_2d(np.asarray(E, dtype=float))
        self.c = np.zeros(n) if c is None else np.atleast_1d(np.asarray(c, dtype=float))
        if self.A.shape != (n, n) or self.B.shape != (n, m) or self.E.shape != (n, p) or self.c.shape != (n,):
            raise ParameterError(
                f"{name}: matrix shapes A{self.A.shape} B{self.B.shape} E{self.E.shape} c{self.c.shape} "
                f"do not match n={n}, m={m}, p={p}"
            )
        if noise.dim != n:
            raise ParameterError(f"{name}: additive noise must have dimension {n}")

    def step(self, x, nu, d, noise):
        return x @ self.A.T + nu @ self.B.T + d @ self.E.T + self.c + noise

    def norms(self):
        """(||A||, ||B||, ||E||)."""
        return spectral_norm(self.A), spectral_norm(self.B), spectral_norm(self.E)

    def fingerprint(self) -> str:
        return "linear:" + json.dumps({
            "A": self.A.tolist(), "B": self.B.tolist(), "E": self.E.tolist(), "c": self.c.tolist(),
            "X": [self.state_set.lower.tolist(), self.state_set.upper.tolist()],
            "D": [self.disturbance_set.lower.tolist(), self.disturbance_set.upper.tolist()],
            "U": self.input_set.points.tolist(),
            "noise": [self.noise.kind, self.noise.mean.tolist(), self.noise.std.tolist()],
        }, sort_keys=True)
