"""
Tests for safety synthesis on finite abstractions and the refined closed loop.
"""
import numpy as np
import pytest

from mdpcert.abstraction.kernel import FiniteMdp, estimate_kernel
from mdpcert.abstraction.quantizer import Quantizer
from mdpcert.errors import ConfigurationError, SpecificationError
from mdpcert.synthesis.refinement import refine_and_rollout
from mdpcert.synthesis.safety import (
    SafetySpec,
    read_policy,
    rollout_finite_mdp,
    synthesize_safety,
    write_policy,
)
from mdpcert.systems.interfaces import BoxSet, FiniteInputSet


def _chain(rows, disturbance_cells=1, inputs=((0.0,),)):
    """Two abstract states with centers 0.5 (safe) and 1.5 on [0, 2]."""
    qx = Quantizer(BoxSet([0.0], [2.0]), 1.0)
    qd = Quantizer(BoxSet([0.0], [float(disturbance_cells)]), 1.0)
    kernel = np.asarray(rows, dtype=float).reshape(2, len(inputs), disturbance_cells, 2)
    return FiniteMdp(qx=qx, qd=qd, inputs=FiniteInputSet(np.asarray(inputs)), kernel=kernel,
                     outside=np.zeros_like(kernel))


SAFE = BoxSet([0.0], [1.0])


def test_two_state_chain_value():
    mdp = _chain([[0.9, 0.1], [0.0, 1.0]])
    policy = synthesize_safety(mdp, SafetySpec(SAFE, 2))
    assert policy.values[0, 0] == pytest.approx(0.81)
    assert policy.values[1, 0] == pytest.approx(0.9)
    assert policy.values[0, 1] == 0.0
    assert policy.horizon == 2


def test_rollout_reproduces_the_value():
    mdp = _chain([[0.9, 0.1], [0.0, 1.0]])
    spec = SafetySpec(SAFE, 2)
    policy = synthesize_safety(mdp, spec)
    result = rollout_finite_mdp(mdp, policy, spec, start=0, trials=10_000, seed=3, confidence=0.999)
    assert result.interval[0] <= 0.81 <= result.interval[1]


def test_invariant_safe_set_has_value_one():
    mdp = _chain([[1.0, 0.0], [0.0, 1.0]])
    policy = synthesize_safety(mdp, SafetySpec(SAFE, 10))
    assert np.all(policy.values[:, 0] == 1.0)


def test_adversary_picks_the_worse_disturbance():
    rows = [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0], [0.0, 1.0]]
    mdp = _chain(rows, disturbance_cells=2)
    policy = synthesize_safety(mdp, SafetySpec(SAFE, 1))
    assert policy.values[0, 0] == pytest.approx(0.5)
    assert policy.adversary[0, 0, 0] == 1


def test_equal_inputs_tie_to_the_lowest_index():
    row = [0.7, 0.3]
    mdp = _chain([row, row, [0.0, 1.0], [0.0, 1.0]], inputs=((0.0,), (1.0,)))
    policy = synthesize_safety(mdp, SafetySpec(SAFE, 3))
    assert np.all(policy.table == 0)


def test_best_input_is_chosen():
    mdp = _chain([[0.5, 0.5], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]], inputs=((0.0,), (1.0,)))
    policy = synthesize_safety(mdp, SafetySpec(SAFE, 3))
    assert policy.table[0, 0] == 1
    assert policy.values[0, 0] == 1.0
    assert np.array_equal(policy.inputs_for(0, np.array([[0.3]])), [[1.0]])


def test_exit_mass_never_counts_as_safe():
    qx = Quantizer(BoxSet([0.0], [2.0]), 1.0)
    qd = Quantizer(BoxSet([0.0], [1.0]), 1.0)
    kernel = np.array([[0.6, 0.4], [0.0, 1.0]]).reshape(2, 1, 1, 2)
    outside = np.array([[0.2, 0.0], [0.0, 0.0]]).reshape(2, 1, 1, 2)
    mdp = FiniteMdp(qx=qx, qd=qd, inputs=FiniteInputSet([[0.0]]), kernel=kernel, outside=outside)
    policy = synthesize_safety(mdp, SafetySpec(SAFE, 1))
    assert policy.values[0, 0] == pytest.approx(0.4)


def test_specification_errors():
    mdp = _chain([[0.9, 0.1], [0.0, 1.0]])
    with pytest.raises(SpecificationError):
        SafetySpec(SAFE, 0)
    with pytest.raises(SpecificationError):
        synthesize_safety(mdp, SafetySpec(BoxSet([0.9], [1.0]), 2))
    with pytest.raises(SpecificationError):
        synthesize_safety(mdp, SafetySpec(BoxSet([-1.0], [1.0]), 2))
    policy = synthesize_safety(mdp, SafetySpec(SAFE, 2))
    with pytest.raises(SpecificationError):
        rollout_finite_mdp(mdp, policy, SafetySpec(SAFE, 3), start=0, trials=10, seed=0)


def test_policy_file_keeps_its_provenance(tmp_path):
    mdp = _chain([[0.9, 0.1], [0.0, 1.0]])
    policy = synthesize_safety(mdp, SafetySpec(SAFE, 2))
    path = tmp_path / "policy.json"
    write_policy(policy, path)
    loaded = read_policy(path)
    assert loaded.mdp_provenance == mdp.provenance_hash()
    assert np.array_equal(loaded.table, policy.table)
    assert np.allclose(loaded.values, policy.values)


@pytest.fixture
def room_policies(quiet_room_net):
    room = quiet_room_net.subsystems[0]
    qx = Quantizer(room.state_set, 0.1)
    qd = Quantizer(room.disturbance_set, 0.5)
    mdp = estimate_kernel(room, qx, qd, 1, seed=0)
    spec = SafetySpec(room.state_set, 5)
    policy = synthesize_safety(mdp, spec)
    return [policy] * 3, [spec] * 3


def test_noise_free_rooms_stay_safe_under_the_refined_policy(quiet_room_net, room_policies):
    policies, specs = room_policies
    result = refine_and_rollout(quiet_room_net, policies, specs, trials=20, seed=1, record=4)
    assert result.frequency == 1.0
    assert result.trajectories.shape == (4, 6, 3)
    assert np.allclose(result.trajectories[:, 0], 0.0)


def test_refined_rollout_is_reproducible(room_net, room_policies):
    policies, specs = room_policies
    a = refine_and_rollout(room_net, policies, specs, trials=50, seed=2, record=50)
    b = refine_and_rollout(room_net, policies, specs, trials=50, seed=2, record=50)
    assert np.array_equal(a.trajectories, b.trajectories)
    assert a.summary() == b.summary()


def test_refined_rollout_argument_checks(quiet_room_net, room_policies):
    policies, specs = room_policies
    with pytest.raises(ConfigurationError):
        refine_and_rollout(quiet_room_net, policies[:2], specs, trials=5, seed=0)
    short = [SafetySpec(specs[0].safe_set, 6)] * 3
    with pytest.raises(SpecificationError):
        refine_and_rollout(quiet_room_net, policies, short, trials=5, seed=0)
