"""
Finite-horizon safety synthesis on a finite abstraction.

Backward recursion with the disturbance center chosen adversarially:

    V_T(x) = 1_safe(x)
    V_k(x) = 1_safe(x) * max_u min_d sum_x' (T - O)(x' | x, u, d) V_{k+1}(x')

Mass that left the state set (O) never counts as safe. Ties in the max go to
the lowest input index and ties in the min to the lowest disturbance index.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from mdpcert.abstraction.kernel import FiniteMdp
from mdpcert.abstraction.quantizer import Quantizer
from mdpcert.closeness.bound import clopper_pearson
from mdpcert.errors import PreconditionError, SpecificationError
from mdpcert.observability import metrics
from mdpcert.systems.interfaces import BoxSet, FiniteInputSet
from mdpcert.utils.rng import derive_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SafetySpec:
    safe_set: BoxSet
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise SpecificationError("safety horizon must be >= 1")


@dataclass(eq=False)
class Policy:
    """
    Step-indexed policy.

    table[k, x]         input index applied at step k in cell x
    values[k, x]        maximal safety probability from step k (values[T] = 1_safe)
    adversary[k, x, u]  disturbance center minimizing the backup
    """
    qx: Quantizer
    inputs: FiniteInputSet
    table: np.ndarray
    values: np.ndarray
    adversary: np.ndarray
    safe: np.ndarray
    mdp_provenance: str = ""

    @property
    def horizon(self) -> int:
        return int(self.table.shape[0])

    def inputs_for(self, k: int, x: np.ndarray) -> np.ndarray:
        """Inputs for continuous (or center) states of shape (B, n)."""
        cells = self.qx.index(x)[0]
        return self.inputs.points[self.table[k, cells]]


def safe_cells(qx: Quantizer, safe_set: BoxSet) -> np.ndarray:
    """Boolean mask of grid centers inside the safe set."""
    return safe_set.contains(qx.centers())


def synthesize_safety(mdp: FiniteMdp, spec: SafetySpec) -> Policy:
    """
    Maximal finite-horizon safety policy against adversarial disturbances.

    Raises:
        SpecificationError: no grid center lies in the safe set, or the safe
            set is not inside the state set
    """
    box = mdp.qx.box
    if np.any(spec.safe_set.lower < box.lower - 1e-12) or np.any(spec.safe_set.upper > box.upper + 1e-12):
        raise SpecificationError("safe set must lie inside the state set")
    safe = safe_cells(mdp.qx, spec.safe_set)
    if not np.any(safe):
        raise SpecificationError("no abstract state lies in the safe set")

    T = spec.horizon
    n_x, n_u = mdp.kernel.shape[0], mdp.kernel.shape[1]
    inside = mdp.kernel - mdp.outside
    values = np.zeros((T + 1, n_x))
    table = np.zeros((T, n_x), dtype=np.int64)
    adversary = np.zeros((T, n_x, n_u), dtype=np.int64)
    values[T] = safe.astype(float)

    for k in range(T - 1, -1, -1):
        backup = inside @ values[k + 1]                # (x, u, d)
        adversary[k] = np.argmin(backup, axis=2)
        worst = np.min(backup, axis=2)                 # (x, u)
        table[k] = np.argmax(worst, axis=1)
        values[k] = np.clip(np.where(safe, np.max(worst, axis=1), 0.0), 0.0, 1.0)

    policy = Policy(
        qx=mdp.qx, inputs=mdp.inputs, table=table, values=values, adversary=adversary,
        safe=safe, mdp_provenance=mdp.provenance_hash(),
    )
    logger.info(
        f"Safety synthesis over {n_x} states, horizon {T}: "
        f"min V0 on safe cells {float(values[0][safe].min()):.4g}"
    )
    return policy


@dataclass
class RolloutResult:
    frequency: float
    safe_trials: int
    trials: int
    interval: tuple
    trajectories: Optional[np.ndarray] = None

    def summary(self) -> dict:
        return {"frequency": self.frequency, "safe_trials": self.safe_trials, "trials": self.trials,
                "interval": list(self.interval)}


def rollout_finite_mdp(
    mdp: FiniteMdp,
    policy: Policy,
    spec: SafetySpec,
    start: int,
    trials: int,
    seed: int,
    confidence: float = 0.95
) -> RolloutResult:
    """
    Simulate the abstraction itself under the policy and the recorded
    adversarial disturbances; exits count as unsafe.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    T = spec.horizon
    if policy.horizon < T:
        raise SpecificationError(f"policy horizon {policy.horizon} shorter than {T}")
    rng = derive_rng(seed, "finite-mdp-rollout", start)
    n_x = mdp.kernel.shape[0]
    inside = mdp.kernel - mdp.outside

    state = np.full(trials, int(start))
    alive = np.full(trials, bool(policy.safe[start]))
    for k in range(T):
        u = policy.table[k, state]
        d = policy.adversary[k, state, u]
        rows = inside[state, u, d]                     # (trials, n_x)
        cumulative = np.cumsum(rows, axis=1)
        draw = rng.random(trials)
        nxt = np.sum(cumulative <= draw[:, None], axis=1)  # n_x means exit
        exited = nxt >= n_x
        state = np.where(exited, state, np.minimum(nxt, n_x - 1))
        alive &= ~exited & policy.safe[state]
    metrics.rollout_trials_total.labels(harness="finite-mdp").inc(trials)
    safe_trials = int(alive.sum())
    return RolloutResult(
        frequency=safe_trials / trials,
        safe_trials=safe_trials,
        trials=trials,
        interval=clopper_pearson(safe_trials, trials, confidence),
    )


def write_policy(policy: Policy, path: Path) -> None:
    """JSON with the grid, tables and the provenance hash of the source abstraction."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({
        "format": "safety-policy/1",
        "state_grid": policy.qx.describe(),
        "inputs": policy.inputs.points.tolist(),
        "horizon": policy.horizon,
        "table": policy.table.tolist(),
        "values": policy.values.tolist(),
        "adversary": policy.adversary.tolist(),
        "safe": policy.safe.tolist(),
        "provenance": policy.mdp_provenance,
    }, sort_keys=True))


def read_policy(path: Path) -> Policy:
    data = json.loads(Path(path).read_text())
    return Policy(
        qx=Quantizer.from_description(data["state_grid"]),
        inputs=FiniteInputSet(np.asarray(data["inputs"], dtype=float)),
        table=np.asarray(data["table"], dtype=np.int64),
        values=np.asarray(data["values"], dtype=float),
        adversary=np.asarray(data["adversary"], dtype=np.int64),
        safe=np.asarray(data["safe"], dtype=bool),
        mdp_provenance=data["provenance"],
    )
