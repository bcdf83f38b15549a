"""
Refinement of abstract safety policies to the black-box network.

Each subsystem quantizes its own continuous state and applies its policy's
input; the network input is the vector of the per-subsystem inputs.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from mdpcert.closeness.bound import clopper_pearson
from mdpcert.errors import ConfigurationError, PreconditionError, SpecificationError
from mdpcert.observability import metrics
from mdpcert.synthesis.safety import Policy, RolloutResult, SafetySpec
from mdpcert.systems.network import InterconnectionSpec
from mdpcert.utils.rng import derive_rng

logger = logging.getLogger(__name__)


def network_inputs(net: InterconnectionSpec, policies: Sequence[Policy], k: int, x: np.ndarray) -> np.ndarray:
    """Stacked inputs chosen by the per-subsystem policies at step k, shape (B, sum m)."""
    parts = net.split(x, net.state_offsets)
    return np.concatenate([pol.inputs_for(k, part) for pol, part in zip(policies, parts)], axis=1)


def trial_noise(net: InterconnectionSpec, seed: int, trials: int, horizon: int, label: str):
    """
    Per-step noise batches; trial t draws from derive_rng(seed, label, t).

    Returns:
        List over steps of per-subsystem arrays of shape (trials, k_i)
    """
    per_trial = [net.sample_noise(derive_rng(seed, label, t), horizon) for t in range(trials)]
    per_subsystem = [np.stack([draws[i] for draws in per_trial]) for i in range(net.size)]
    return [[arr[:, k] for arr in per_subsystem] for k in range(horizon)]


def refine_and_rollout(
    net: InterconnectionSpec,
    policies: Sequence[Policy],
    specs: Sequence[SafetySpec],
    trials: int,
    seed: int,
    x0: Optional[np.ndarray] = None,
    record: int = 0,
    confidence: float = 0.95
) -> RolloutResult:
    """
    Closed-loop Monte Carlo of the concrete network.

    Args:
        net: Network
        policies: One policy per subsystem
        specs: One safety spec per subsystem (horizons must agree)
        trials: Number of trials
        seed: Master seed
        x0: Stacked initial state (defaults to the state-set midpoints)
        record: Number of leading trials whose trajectories are kept

    Returns:
        RolloutResult; trajectories has shape (record, T + 1, sum n) when record > 0
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    if len(policies) != net.size or len(specs) != net.size:
        raise ConfigurationError("one policy and one safety spec per subsystem are required")
    horizon = specs[0].horizon
    if any(s.horizon != horizon for s in specs) or any(p.horizon < horizon for p in policies):
        raise SpecificationError("safety horizons of subsystems and policies must agree")

    x = np.broadcast_to(
        net.state_set.midpoint if x0 is None else np.asarray(x0, dtype=float),
        (trials, net.total_state_dim)
    ).copy()

    def all_safe(states: np.ndarray) -> np.ndarray:
        parts = net.split(states, net.state_offsets)
        return np.all(np.stack([s.safe_set.contains(p) for s, p in zip(specs, parts)], axis=-1), axis=-1)

    noise = trial_noise(net, seed, trials, horizon, "refined-rollout")
    keep = min(record, trials)
    path = [x[:keep].copy()]
    alive = all_safe(x)
    for k in range(horizon):
        nu = network_inputs(net, policies, k, x)
        x = net.step_batch(x, nu, noise[k])
        alive &= all_safe(x)
        path.append(x[:keep].copy())

    metrics.rollout_trials_total.labels(harness="refined").inc(trials)
    safe_trials = int(alive.sum())
    result = RolloutResult(
        frequency=safe_trials / trials,
        safe_trials=safe_trials,
        trials=trials,
        interval=clopper_pearson(safe_trials, trials, confidence),
        trajectories=np.stack(path, axis=1) if keep else None,
    )
    logger.info(f"Refined closed loop: {safe_trials}/{trials} trials safe for {horizon} steps")
    return result
