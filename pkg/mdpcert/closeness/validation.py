"""
Monte Carlo validation of the closeness bound.

Paired trajectories of the concrete network and the product abstraction run
under the same policy (evaluated on the abstract state) and share every
noise draw. A trial violates when sup_k |x_k - xh_k| >= epsilon.
"""
import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from mdpcert.abstraction.product import ProductAbstraction
from mdpcert.closeness.bound import clopper_pearson
from mdpcert.errors import PreconditionError, SpecificationError
from mdpcert.observability import metrics
from mdpcert.synthesis.refinement import network_inputs, trial_noise
from mdpcert.synthesis.safety import Policy

logger = logging.getLogger(__name__)


@dataclass
class ValidationResult:
    epsilon: float
    horizon: int
    trials: int
    violations: int
    frequency: float
    interval: tuple
    sup_mismatch: np.ndarray
    delta_bound: Optional[float] = None

    @property
    def violated(self) -> np.ndarray:
        return self.sup_mismatch >= self.epsilon

    def summary(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "horizon": self.horizon,
            "trials": self.trials,
            "violations": self.violations,
            "empirical_rate": self.frequency,
            "cp_interval": list(self.interval),
            "delta_bound": self.delta_bound,
        }

    def write(self, csv_path: Path, summary_path: Path) -> None:
        """Per-trial CSV (trial, sup_mismatch, violated) and a summary JSON."""
        csv_path = Path(csv_path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["trial", "sup_mismatch", "violated"])
            for t, (value, flag) in enumerate(zip(self.sup_mismatch, self.violated)):
                writer.writerow([t, repr(float(value)), int(flag)])
        Path(summary_path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True))


def empirical_violation(
    product: ProductAbstraction,
    policies: Optional[Sequence[Policy]],
    epsilon: float,
    horizon: int,
    trials: int,
    seed: int,
    x0: Optional[np.ndarray] = None,
    confidence: float = 0.95
) -> ValidationResult:
    """
    Fraction of paired trials whose mismatch reaches epsilon within the horizon.

    Args:
        product: Abstraction of the network (carries the network itself)
        policies: One policy per subsystem, or None for the first input everywhere
        epsilon: Mismatch threshold
        horizon: Number of steps
        trials: Number of paired trials; trial t uses derive_rng(seed, "validation", t)
        seed: Master seed
        x0: Stacked concrete initial state (defaults to the state-set midpoints);
            the abstract trajectory starts at its quantization
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    net = product.net
    if policies is not None and any(p.horizon < horizon for p in policies):
        raise SpecificationError("policy horizon shorter than the validation horizon")

    x = np.broadcast_to(
        net.state_set.midpoint if x0 is None else np.asarray(x0, dtype=float),
        (trials, net.total_state_dim)
    ).copy()
    xh = product.quantize_states(x)
    sup = np.linalg.norm(x - xh, axis=1)
    first_inputs = np.concatenate([s.input_set.points[0] for s in net.subsystems])

    noise = trial_noise(net, seed, trials, horizon, "validation")
    for k in range(horizon):
        if policies is None:
            nu = np.broadcast_to(first_inputs, (trials, first_inputs.size))
        else:
            nu = network_inputs(net, policies, k, xh)
        x = net.step_batch(x, nu, noise[k])
        xh = product.step_batch(xh, nu, noise[k])
        sup = np.maximum(sup, np.linalg.norm(x - xh, axis=1))

    metrics.rollout_trials_total.labels(harness="validation").inc(trials)
    violations = int(np.sum(sup >= epsilon))
    result = ValidationResult(
        epsilon=float(epsilon),
        horizon=int(horizon),
        trials=int(trials),
        violations=violations,
        frequency=violations / trials,
        interval=clopper_pearson(violations, trials, confidence),
        sup_mismatch=sup,
    )
    logger.info(
        f"Validation eps={epsilon} T={horizon}: {violations}/{trials} violations "
        f"(CP {result.interval[0]:.4g}..{result.interval[1]:.4g})"
    )
    return result
