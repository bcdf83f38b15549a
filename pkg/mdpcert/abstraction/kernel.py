"""
Finite MDP construction from black-box samples.

For every triple (state center, input, disturbance center) the black box is
sampled and each successor quantized. Two estimators turn the samples into a
transition row:

- "empirical": normalized frequency counts (no distributional assumption)
- "gaussian-mle": a Gaussian fitted by MLE, integrated over each cell with
  the outermost edges pushed to -inf / +inf

Successor mass beyond the grid is clamped into the nearest boundary cell and
also recorded in `outside`.
"""
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from scipy.stats import norm

from mdpcert.abstraction.mle import mle_gaussian
from mdpcert.abstraction.quantizer import Quantizer
from mdpcert.cache.keys import hash_arrays
from mdpcert.errors import ConfigurationError, EstimationError, InsufficientDataError, PreconditionError
from mdpcert.observability import metrics
from mdpcert.systems.interfaces import BlackBoxSystem, FiniteInputSet
from mdpcert.utils.rng import derive_rng

logger = logging.getLogger(__name__)

MODE_EMPIRICAL = "empirical"
MODE_GAUSSIAN_MLE = "gaussian-mle"
KERNEL_MODES = (MODE_EMPIRICAL, MODE_GAUSSIAN_MLE)
ROW_SUM_TOL = 1e-9


@dataclass(eq=False)
class FiniteMdp:
    """
    Finite abstraction of one subsystem.

    kernel[x, u, d, x'] = T(x' | x, u, d); outside[x, u, d, x'] is the part
    of that mass that actually left the state set.
    """
    qx: Quantizer
    qd: Quantizer
    inputs: FiniteInputSet
    kernel: np.ndarray
    outside: np.ndarray
    mode: str = MODE_EMPIRICAL
    seed: int = 0
    samples_per_cell: int = 0
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        expected = (self.qx.num_cells, self.inputs.size, self.qd.num_cells, self.qx.num_cells)
        if self.kernel.shape != expected or self.outside.shape != expected:
            raise ConfigurationError(f"kernel shape {self.kernel.shape} does not match grid {expected}")
        if np.any(self.kernel < 0) or np.any(self.kernel > 1 + ROW_SUM_TOL):
            raise EstimationError("kernel entries must lie in [0, 1]")
        deviation = float(np.max(np.abs(self.kernel.sum(axis=-1) - 1.0)))
        if deviation > ROW_SUM_TOL:
            raise EstimationError(f"kernel rows not stochastic (max deviation {deviation:.2e})")

    @property
    def states(self) -> np.ndarray:
        return self.qx.centers()

    @property
    def disturbances(self) -> np.ndarray:
        return self.qd.centers()

    def exit_mass(self) -> np.ndarray:
        """Per-row fraction of mass that left the state set, shape (|X|, |U|, |D|)."""
        return self.outside.sum(axis=-1)

    def provenance_hash(self) -> str:
        return hash_arrays(self.kernel, self.outside, self.states, self.disturbances, self.inputs.points)


def _gaussian_cell_masses(edges: np.ndarray, mean: float, std: float):
    """(full, inside) probabilities per cell along one axis."""
    cells = edges.size - 1
    if std == 0.0:
        idx = int(np.clip(np.ceil(np.round((mean - edges[0]) / (edges[1] - edges[0]), 9)) - 1, 0, cells - 1))
        full = np.zeros(cells)
        full[idx] = 1.0
        inside = full.copy() if edges[0] <= mean <= edges[-1] else np.zeros(cells)
        return full, inside
    cdf = norm.cdf(edges, loc=mean, scale=std)
    inside = np.diff(cdf)
    full = inside.copy()
    full[0] += cdf[0]
    full[-1] += 1.0 - cdf[-1]
    return full, inside


def _row_from_samples(successors: np.ndarray, qx: Quantizer, mode: str):
    n_cells = qx.num_cells
    if mode == MODE_EMPIRICAL:
        idx, in_set = qx.index(successors)
        total = successors.shape[0]
        row = np.bincount(idx, minlength=n_cells) / total
        out = np.bincount(idx[~in_set], minlength=n_cells) / total
        return row, out

    fit = mle_gaussian(successors)
    full = np.ones(1)
    inside = np.ones(1)
    for axis in range(qx.dim):
        f_axis, i_axis = _gaussian_cell_masses(qx.axis_edges(axis), float(fit.mean[axis]), float(fit.std[axis]))
        full = np.multiply.outer(full, f_axis).ravel()
        inside = np.multiply.outer(inside, i_axis).ravel()
    mass = full.sum()
    if mass <= 0.0:
        raise EstimationError("zero total mass in a kernel row")
    return full / mass, np.clip(full - inside, 0.0, None) / mass


def estimate_kernel(
    sys: BlackBoxSystem,
    qx: Quantizer,
    qd: Quantizer,
    samples_per_cell: int,
    seed: int,
    mode: str = MODE_EMPIRICAL,
    workers: int = 1
) -> FiniteMdp:
    """
    Estimate the transition tensor of the finite abstraction.

    Args:
        sys: Black-box subsystem
        qx: State quantizer (over sys.state_set)
        qd: Disturbance quantizer (over sys.disturbance_set)
        samples_per_cell: One-step samples per (x, u, d) triple
        seed: Master seed; each triple draws from derive_rng(seed, triple index)
        mode: "empirical" or "gaussian-mle"
        workers: Thread pool size (results do not depend on it)

    Returns:
        FiniteMdp
    """
    if samples_per_cell < 1:
        raise PreconditionError("samples_per_cell must be >= 1")
    if mode not in KERNEL_MODES:
        raise ConfigurationError(f"unknown kernel mode {mode!r}, expected one of {KERNEL_MODES}")
    if mode == MODE_GAUSSIAN_MLE and samples_per_cell < 2:
        raise InsufficientDataError("gaussian-mle kernels need at least 2 samples per cell")
    if qx.dim != sys.n or qd.dim != sys.p:
        raise ConfigurationError("quantizer dimensions do not match the subsystem")

    states = qx.centers()
    disturbances = qd.centers()
    inputs = sys.input_set.points
    shape = (qx.num_cells, inputs.shape[0], qd.num_cells, qx.num_cells)
    kernel = np.zeros(shape)
    outside = np.zeros(shape)

    def fill_state(i: int):
        for u in range(shape[1]):
            nu = np.broadcast_to(inputs[u], (samples_per_cell, sys.m))
            x = np.broadcast_to(states[i], (samples_per_cell, sys.n))
            for j in range(shape[2]):
                triple = int(np.ravel_multi_index((i, u, j), shape[:3]))
                noise = sys.noise.sample(derive_rng(seed, triple), samples_per_cell)
                d = np.broadcast_to(disturbances[j], (samples_per_cell, sys.p))
                successors = sys.step(x, nu, d, noise)
                kernel[i, u, j], outside[i, u, j] = _row_from_samples(successors, qx, mode)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        list(pool.map(fill_state, range(shape[0])))

    rows = shape[0] * shape[1] * shape[2]
    metrics.kernel_rows_total.labels(mode=mode).inc(rows)
    mdp = FiniteMdp(
        qx=qx, qd=qd, inputs=sys.input_set, kernel=kernel, outside=outside,
        mode=mode, seed=int(seed), samples_per_cell=int(samples_per_cell),
        metadata={"system": sys.name},
    )
    logger.info(
        f"{sys.name}: kernel {shape} estimated ({mode}, {samples_per_cell} samples/cell), "
        f"max exit mass {float(mdp.exit_mass().max()):.3g}"
    )
    return mdp


def write_finite_mdp(mdp: FiniteMdp, path: Path) -> str:
    """
    Serialize as one JSON header line followed by CSV rows.

    Each row is `kind,x,u,d,p_0,...,p_{|X|-1}` with kind T (transition
    probabilities) or O (clamped out-of-set mass).

    Returns:
        Provenance hash written to the header
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    provenance = mdp.provenance_hash()
    header = {
        "format": "finite-mdp/1",
        "state_grid": mdp.qx.describe(),
        "disturbance_grid": mdp.qd.describe(),
        "inputs": mdp.inputs.points.tolist(),
        "shape": list(mdp.kernel.shape),
        "mode": mdp.mode,
        "seed": mdp.seed,
        "samples_per_cell": mdp.samples_per_cell,
        "metadata": mdp.metadata,
        "provenance": provenance,
    }
    index = np.array(np.unravel_index(np.arange(np.prod(mdp.kernel.shape[:3])), mdp.kernel.shape[:3])).T
    buffer = io.StringIO()
    buffer.write(json.dumps(header, sort_keys=True) + "\n")
    for kind, tensor in (("T", mdp.kernel), ("O", mdp.outside)):
        flat = tensor.reshape(-1, tensor.shape[-1])
        for triple, row in zip(index, flat):
            buffer.write(kind + "," + ",".join(str(int(v)) for v in triple) + ",")
            buffer.write(",".join(repr(float(p)) for p in row) + "\n")
    path.write_text(buffer.getvalue())
    logger.debug(f"Finite MDP written to {path}")
    return provenance


def read_finite_mdp(path: Path, expected_provenance: Optional[str] = None) -> FiniteMdp:
    """Load a file written by write_finite_mdp and verify its provenance hash."""
    lines = Path(path).read_text().splitlines()
    header = json.loads(lines[0])
    shape = tuple(header["shape"])
    tensors = {"T": np.zeros(shape), "O": np.zeros(shape)}
    for line in lines[1:]:
        parts = line.split(",")
        x, u, d = (int(v) for v in parts[1:4])
        tensors[parts[0]][x, u, d] = np.array(parts[4:], dtype=float)
    mdp = FiniteMdp(
        qx=Quantizer.from_description(header["state_grid"]),
        qd=Quantizer.from_description(header["disturbance_grid"]),
        inputs=FiniteInputSet(np.asarray(header["inputs"], dtype=float)),
        kernel=tensors["T"],
        outside=tensors["O"],
        mode=header["mode"],
        seed=int(header["seed"]),
        samples_per_cell=int(header["samples_per_cell"]),
        metadata=header.get("metadata", {}),
    )
    stored = header["provenance"]
    if mdp.provenance_hash() != stored or (expected_provenance and expected_provenance != stored):
        raise ConfigurationError(f"finite MDP at {path} failed its provenance check")
    return mdp
