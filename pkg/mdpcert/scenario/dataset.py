"""
Scenario data for the sampled storage-function program.

N uniform pairs (x, d) over X x D. For every pair, every input and every
realization q a noise draw is fixed and shared by the concrete successor
f(x, nu, d, noise_q) and all abstract successors qx(f(xh, nu, dh, noise_q)).
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from mdpcert.abstraction.quantizer import Quantizer
from mdpcert.cache.keys import hash_arrays
from mdpcert.errors import ConfigurationError, PreconditionError
from mdpcert.systems.interfaces import BlackBoxSystem
from mdpcert.utils.rng import derive_rng

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ScenarioDataset:
    sys: BlackBoxSystem
    qx: Quantizer
    qd: Quantizer
    x_bar: np.ndarray        # (N, n)
    d_bar: np.ndarray        # (N, p)
    noise: np.ndarray        # (N, |U|, L, k)
    successors: np.ndarray   # (N, |U|, L, n)
    seed: int

    @property
    def N(self) -> int:
        return int(self.x_bar.shape[0])

    @property
    def L(self) -> int:
        return int(self.noise.shape[2])

    @cached_property
    def state_grid(self) -> np.ndarray:
        return self.qx.centers()

    @cached_property
    def disturbance_grid(self) -> np.ndarray:
        return self.qd.centers()

    @property
    def pair_count(self) -> int:
        """Number of paired (concrete, abstract) realizations."""
        return self.N * self.sys.input_set.size * self.qx.num_cells * self.qd.num_cells * self.L

    def dataset_hash(self) -> str:
        return hash_arrays(self.x_bar, self.d_bar, self.noise, self.successors)

    def abstract_successors(self, i: int, u: int) -> np.ndarray:
        """
        qx(f(xh, nu_u, dh, noise_{i,u,q})) for every grid pair and realization.

        Returns:
            Array of shape (|Xh|, |Dh|, L, n)
        """
        sys = self.sys
        gx, gd, L = self.state_grid.shape[0], self.disturbance_grid.shape[0], self.L
        batch = gx * gd * L
        x = np.broadcast_to(self.state_grid[:, None, None, :], (gx, gd, L, sys.n)).reshape(batch, sys.n)
        d = np.broadcast_to(self.disturbance_grid[None, :, None, :], (gx, gd, L, sys.p)).reshape(batch, sys.p)
        noise = np.broadcast_to(self.noise[i, u][None, None], (gx, gd, L, self.noise.shape[-1])).reshape(batch, -1)
        nu = np.broadcast_to(sys.input_set.points[u], (batch, sys.m))
        raw = sys.step(x, nu, d, noise)
        return self.qx.quantize(raw)[0].reshape(gx, gd, L, sys.n)


def draw_scenario_data(
    sys: BlackBoxSystem,
    N: int,
    L: int,
    qx: Quantizer,
    qd: Quantizer,
    seed: int,
    workers: int = 1
) -> ScenarioDataset:
    """
    Draw the scenario dataset.

    Sample i uses the stream derive_rng(seed, i) for its pair and all of its
    noise draws, so the dataset does not depend on the worker count.
    """
    if N < 1 or L < 1:
        raise PreconditionError(f"scenario data needs N, L >= 1, got N={N}, L={L}")
    if qx.dim != sys.n or qd.dim != sys.p:
        raise ConfigurationError("quantizer dimensions do not match the subsystem")

    inputs = sys.input_set.points
    m_inputs = inputs.shape[0]
    k = sys.noise.dim
    x_bar = np.zeros((N, sys.n))
    d_bar = np.zeros((N, sys.p))
    noise = np.zeros((N, m_inputs, L, k))
    successors = np.zeros((N, m_inputs, L, sys.n))

    def draw(i: int):
        rng = derive_rng(seed, i)
        x_bar[i] = sys.state_set.sample_uniform(rng, 1)[0]
        d_bar[i] = sys.disturbance_set.sample_uniform(rng, 1)[0]
        draws = sys.noise.sample(rng, m_inputs * L).reshape(m_inputs, L, k)
        noise[i] = draws
        x = np.broadcast_to(x_bar[i], (m_inputs * L, sys.n))
        d = np.broadcast_to(d_bar[i], (m_inputs * L, sys.p))
        nu = np.repeat(inputs, L, axis=0)
        successors[i] = sys.step(x, nu, d, draws.reshape(-1, k)).reshape(m_inputs, L, sys.n)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        list(pool.map(draw, range(N)))

    dataset = ScenarioDataset(
        sys=sys, qx=qx, qd=qd, x_bar=x_bar, d_bar=d_bar,
        noise=noise, successors=successors, seed=int(seed),
    )
    logger.info(f"{sys.name}: scenario data N={N}, L={L}, {dataset.pair_count} paired realizations")
    return dataset
