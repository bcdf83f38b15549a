"""
Tests for subsystems, networks and the room case study.
"""
import numpy as np
import pytest

from mdpcert.errors import ConfigurationError, ParameterError, PreconditionError
from mdpcert.numerics.linalg import max_eigen_sym
from mdpcert.systems.interfaces import BoxSet, CallableSystem, FiniteInputSet, NoiseModel
from mdpcert.systems.loader import NetworkConfig, load_network
from mdpcert.systems.network import InterconnectionSpec, interconnect_step, sample_one_step
from mdpcert.systems.room import RoomNetworkParams, circulant_coupling, make_room_network
from mdpcert.utils.rng import derive_rng
from tests.conftest import scalar_linear


def test_room_step_matches_hand_computation(quiet_room_net):
    room = quiet_room_net.subsystems[0]
    outcome = sample_one_step(room, [0.3], [0.2], [0.1, -0.1], derive_rng(1))
    # a_ii = 1 - 0.1 - 0.1 - 0.02 = 0.78
    assert outcome.state[0] == pytest.approx(0.234, abs=1e-12)
    assert not outcome.exited


def test_room_step_at_origin_is_outside_heat_only(quiet_room_net):
    room = quiet_room_net.subsystems[1]
    outcome = sample_one_step(room, [0.0], [0.0], [0.0, 0.0], derive_rng(1))
    assert outcome.state[0] == pytest.approx(-0.1, abs=1e-12)


def test_room_step_is_reproducible_from_the_rng(room_net):
    room = room_net.subsystems[0]
    a = sample_one_step(room, [0.1], [0.05], [0.0, 0.2], derive_rng(9, "step"))
    b = sample_one_step(room, [0.1], [0.05], [0.0, 0.2], derive_rng(9, "step"))
    c = sample_one_step(room, [0.1], [0.05], [0.0, 0.2], derive_rng(10, "step"))
    assert np.array_equal(a.state, b.state)
    assert not np.array_equal(a.state, c.state)


@pytest.mark.parametrize("x, nu, d", [
    ([0.7], [0.0], [0.0, 0.0]),
    ([0.0], [0.03], [0.0, 0.0]),
    ([0.0], [0.0], [0.0, 0.9]),
])
def test_sample_one_step_rejects_out_of_set_arguments(room_net, x, nu, d):
    with pytest.raises(PreconditionError):
        sample_one_step(room_net.subsystems[0], x, nu, d, derive_rng(0))


def test_successor_leaving_the_state_set_is_flagged_not_clamped():
    sys = scalar_linear(a=2.0)
    outcome = sample_one_step(sys, [1.0], [0.0], [0.0], derive_rng(0))
    assert outcome.state[0] == pytest.approx(2.0)
    assert bool(outcome.exited)


def test_selector_coupling_picks_both_neighbours(quiet_room_net):
    ds = quiet_room_net.disturbances(np.array([0.1, 0.2, 0.3]))
    assert np.allclose(ds[0], [0.3, 0.2])
    assert np.allclose(ds[1], [0.1, 0.3])
    assert np.allclose(ds[2], [0.2, 0.1])


def test_adjacency_coupling_gram_spectrum():
    coupling = circulant_coupling(3, "adjacency")
    gram = coupling.T @ coupling
    assert np.allclose(np.diag(gram), 2.0)
    assert np.allclose(np.sort(np.linalg.eigvalsh(gram)), [1.0, 1.0, 4.0])


def test_selector_coupling_shape_for_a_hundred_rooms():
    coupling = circulant_coupling(100)
    assert coupling.shape == (200, 100)
    assert np.allclose(coupling.sum(axis=1), 1.0)
    assert max_eigen_sym(coupling.T @ coupling) == pytest.approx(2.0)


def test_coupling_forms_produce_identical_trajectories():
    selector = make_room_network(RoomNetworkParams(M=3, coupling_form="selector"))
    adjacency = make_room_network(RoomNetworkParams(M=3, coupling_form="adjacency"))
    x = np.array([0.1, 0.2, 0.3])
    nu = np.array([0.0, 0.1, 0.2])
    a = interconnect_step(selector, x, nu, derive_rng(4))
    b = interconnect_step(adjacency, x, nu, derive_rng(4))
    assert np.allclose(a.state, b.state, atol=1e-12)
    assert a.exited.shape == (3,)


def test_interconnect_step_checks_stacked_dimensions(room_net):
    with pytest.raises(ConfigurationError):
        interconnect_step(room_net, [0.0, 0.0], [0.0, 0.0, 0.0], derive_rng(0))
    with pytest.raises(ConfigurationError):
        interconnect_step(room_net, [0.0, 0.0, 0.0], [0.0], derive_rng(0))


def test_coupling_shape_must_match_subsystem_dimensions():
    subs = (scalar_linear(name="a"), scalar_linear(name="b"))
    with pytest.raises(ConfigurationError):
        InterconnectionSpec(subsystems=subs, coupling=np.zeros((3, 2)))


def test_noise_free_room_contracts_to_its_fixed_point(quiet_room_net):
    room = quiet_room_net.subsystems[0]
    x = np.zeros((1, 1))
    nu = np.array([[0.1]])
    d = np.zeros((1, 2))
    for _ in range(200):
        x = room.step(x, nu, d, room.noise.zeros(1))
    assert x[0, 0] == pytest.approx(room.fixed_point(0.1), abs=1e-9)


def test_room_without_cooler_ignores_the_input():
    net = make_room_network(RoomNetworkParams(M=3, theta=0.0, noise_sigma=0.0))
    room = net.subsystems[0]
    x = np.array([[0.2]])
    d = np.array([[0.1, -0.3]])
    off = room.step(x, np.array([[0.0]]), d, room.noise.zeros(1))
    on = room.step(x, np.array([[0.2]]), d, room.noise.zeros(1))
    assert np.array_equal(off, on)


@pytest.mark.parametrize("params", [
    RoomNetworkParams(M=2),
    RoomNetworkParams(M=3, theta=5.0),
    RoomNetworkParams(M=3, T_e=[-1.0, -1.0]),
])
def test_invalid_room_parameters_are_rejected(params):
    with pytest.raises(ParameterError):
        make_room_network(params)


def test_room_fingerprints_group_identical_rooms():
    net = make_room_network(RoomNetworkParams(M=4, T_e=[-1.0, -1.0, -1.0, -2.0]))
    prints = [s.fingerprint() for s in net.subsystems]
    assert prints[0] == prints[1] == prints[2]
    assert prints[3] != prints[0]


def test_box_and_input_set_validation():
    with pytest.raises(ParameterError):
        BoxSet([0.0], [0.0])
    with pytest.raises(ParameterError):
        FiniteInputSet([[0.0], [0.0]])
    inputs = FiniteInputSet([0.0, 0.5])
    assert inputs.dim == 1
    assert inputs.index_of([0.5]) == 1
    assert inputs.index_of([0.25]) is None


def test_custom_noise_sampler_is_used():
    noise = NoiseModel(kind="custom", mean=[0.0], std=[0.0], sampler=lambda rng, size: np.full((size, 1), 0.5))
    sys = CallableSystem(
        lambda x, nu, d, w: x + w,
        BoxSet([-1.0], [1.0]), FiniteInputSet([[0.0]]), BoxSet([-1.0], [1.0]), noise,
    )
    outcome = sample_one_step(sys, [0.25], [0.0], [0.0], derive_rng(0))
    assert outcome.state[0] == pytest.approx(0.75)


def test_linear_network_from_csv_coupling(tmp_path):
    (tmp_path / "coupling.csv").write_text("0.0,1.0\n1.0,0.0\n")
    sub = {
        "state_bounds": [[-1.0], [1.0]],
        "disturbance_bounds": [[-1.0], [1.0]],
        "inputs": [[0.0], [0.1]],
        "A": [[0.5]], "B": [[1.0]], "E": [[0.1]],
        "noise_std": [0.0],
    }
    config = NetworkConfig(kind="linear", subsystems=[{**sub, "name": "a"}, {**sub, "name": "b"}],
                           coupling_csv="coupling.csv")
    net = load_network(config, tmp_path)
    assert net.size == 2
    assert np.array_equal(net.coupling, [[0.0, 1.0], [1.0, 0.0]])
    outcome = interconnect_step(net, [0.2, 0.4], [0.1, 0.0], derive_rng(0))
    assert np.allclose(outcome.state, [0.5 * 0.2 + 0.1 + 0.1 * 0.4, 0.5 * 0.4 + 0.1 * 0.2])


def test_linear_network_needs_a_coupling(tmp_path):
    with pytest.raises(ConfigurationError):
        load_network(NetworkConfig(kind="linear"), tmp_path)
    with pytest.raises(ConfigurationError):
        load_network(NetworkConfig(kind="python", factory="nowhere"), tmp_path)
