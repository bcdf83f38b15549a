"""
Shared fixtures: small networks, hand-built solutions and certificates.
"""
from pathlib import Path
from typing import Optional

import numpy as np
import pytest

from mdpcert.cache.memory_cache import MemoryCache
from mdpcert.certification.certificate import StorageCertificate
from mdpcert.scenario.sop import ScenarioSolution
from mdpcert.scenario.templates import PolynomialTemplate
from mdpcert.systems.interfaces import BoxSet, FiniteInputSet, NoiseModel
from mdpcert.systems.linear import LinearSubsystem
from mdpcert.systems.room import RoomNetworkParams, make_room_network

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def room_net():
    """Three noisy rooms, selector coupling."""
    return make_room_network(RoomNetworkParams(M=3))


@pytest.fixture
def quiet_room_net():
    """Three rooms with the noise switched off."""
    return make_room_network(RoomNetworkParams(M=3, noise_sigma=0.0))


@pytest.fixture
def cache():
    return MemoryCache(name="test", max_size=16)


def scalar_linear(a: float = 0.5, e: float = 0.0, std: float = 0.0, name: str = "lin") -> LinearSubsystem:
    """x+ = a x + nu + e d + noise on [-1, 1] with inputs {0}."""
    return LinearSubsystem(
        A=[[a]], B=[[1.0]], E=[[e]],
        state_set=BoxSet([-1.0], [1.0]),
        input_set=FiniteInputSet([[0.0]]),
        disturbance_set=BoxSet([-1.0], [1.0]),
        noise=NoiseModel(mean=[0.0], std=[std]),
        name=name,
    )


def make_solution(
    psi: float = -0.3019,
    gamma: float = 141.0,
    alpha: float = 0.99,
    varpi: float = 0.42,
    Z: Optional[np.ndarray] = None,
    n: int = 1,
    p: int = 2,
    kappa=(0.11, 0.14, 143.0),
    N: int = 911,
    L: int = 643,
) -> ScenarioSolution:
    if Z is None:
        Z = np.zeros((n + p, n + p))
        Z[:p, :p] = 0.001 * np.eye(p)
        Z[p:, p:] = -0.01 * np.eye(n)
    return ScenarioSolution(
        kappa=np.asarray(kappa, dtype=float),
        gamma=gamma,
        varpi=varpi,
        Z=np.asarray(Z, dtype=float),
        alpha_star=alpha,
        psi_star=psi,
        N_used=N,
        L_used=L,
        n=n,
        p=p,
        template=PolynomialTemplate(n, (4, 2), True).describe(),
        mu=0.1,
        max_violation=0.0,
    )


def make_certificate(
    solution: ScenarioSolution,
    name: str = "part",
    certified: bool = True,
    beta1: float = 1e-4,
    beta2: float = 1e-4,
) -> StorageCertificate:
    return StorageCertificate(
        name=name,
        solution=solution,
        lipschitz=[0.8],
        eta_inv=[0.362],
        eps1=[0.8 * 0.362],
        eps2=[0.025],
        margin=-0.0123 if certified else 0.1,
        beta1=beta1,
        beta2=beta2,
        confidence=1.0 - beta1 - beta2,
        certified=certified,
        dims=solution.n + solution.p,
        volume=1.0,
    )
