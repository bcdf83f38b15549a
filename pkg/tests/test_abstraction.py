"""
Tests for quantizers, Gaussian MLE and finite-MDP kernel estimation.
"""
import numpy as np
import pytest

from mdpcert.abstraction.kernel import estimate_kernel, read_finite_mdp, write_finite_mdp
from mdpcert.abstraction.mle import mle_gaussian
from mdpcert.abstraction.quantizer import Quantizer, quantize
from mdpcert.errors import ConfigurationError, InsufficientDataError, ParameterError, PreconditionError
from mdpcert.systems.interfaces import BoxSet
from mdpcert.utils.rng import derive_rng


@pytest.fixture
def unit_grid():
    return Quantizer(BoxSet([-0.5], [0.5]), 0.1)


def test_quantize_maps_to_the_nearest_center(unit_grid):
    center, in_set = quantize(unit_grid, [0.07])
    assert center[0] == pytest.approx(0.05)
    assert in_set


def test_quantize_boundary_tie_goes_to_the_lower_cell(unit_grid):
    center, _ = quantize(unit_grid, [0.10])
    assert center[0] == pytest.approx(0.05)
    center, _ = quantize(unit_grid, [-0.5])
    assert center[0] == pytest.approx(-0.45)


def test_quantize_is_idempotent_on_centers(unit_grid):
    centers = unit_grid.centers()
    again, in_set = unit_grid.quantize(centers)
    assert np.allclose(again, centers)
    assert in_set.all()


def test_points_outside_the_box_are_flagged(unit_grid):
    center, in_set = quantize(unit_grid, [0.7])
    assert center[0] == pytest.approx(0.45)
    assert not in_set


def test_rho_is_the_cell_half_diagonal(unit_grid):
    assert unit_grid.rho == pytest.approx(0.05)
    plane = Quantizer(BoxSet([-0.5, -0.5], [0.5, 0.5]), 0.1)
    assert plane.rho == pytest.approx(np.sqrt(0.02) / 2)


@pytest.mark.parametrize("lower, upper, width", [
    ([-0.5], [0.5], 0.1),
    ([-0.5, -0.5], [0.5, 0.5], 0.1),
    ([0.0, -1.0, 2.0], [1.0, 1.0, 2.5], 0.3),
])
def test_quantization_error_never_exceeds_rho(lower, upper, width):
    q = Quantizer(BoxSet(lower, upper), width)
    points = q.box.sample_uniform(derive_rng(3, "quantizer"), 100_000)
    centers, in_set = q.quantize(points)
    errors = np.linalg.norm(points - centers, axis=1)
    assert in_set.all()
    assert errors.max() <= q.rho + 1e-12


def test_widths_are_adjusted_to_tile_the_box():
    q = Quantizer(BoxSet([0.0], [1.0]), 0.3)
    assert q.cells_per_dim == (4,)
    assert q.cell_widths[0] == pytest.approx(0.25)
    assert np.allclose(q.axis_edges(0), [0.0, 0.25, 0.5, 0.75, 1.0])
    assert len(q.cell_edges()) == 1
    with pytest.raises(ParameterError):
        Quantizer(BoxSet([0.0], [1.0]), 0.0)


def test_refinement_never_increases_the_error():
    coarse = Quantizer(BoxSet([-1.0, 0.0], [1.0, 1.0]), 0.25)
    fine = Quantizer(coarse.box, coarse.cell_widths / 2.0)
    points = coarse.box.sample_uniform(derive_rng(5), 10_000)
    err_coarse = np.linalg.norm(points - coarse.quantize(points)[0], axis=1)
    err_fine = np.linalg.norm(points - fine.quantize(points)[0], axis=1)
    assert fine.rho == pytest.approx(coarse.rho / 2)
    assert err_fine.max() <= err_coarse.max()


def test_flat_index_agrees_with_center_order():
    q = Quantizer(BoxSet([0.0, 0.0], [1.0, 2.0]), [0.5, 0.5])
    centers = q.centers()
    flat, _ = q.index(centers)
    assert np.array_equal(flat, np.arange(q.num_cells))
    assert Quantizer.from_description(q.describe()).cells_per_dim == q.cells_per_dim


def test_mle_of_two_points():
    fit = mle_gaussian([0.0, 2.0])
    assert fit.mean[0] == pytest.approx(1.0)
    assert fit.std[0] ** 2 == pytest.approx(2.0)
    assert fit.sample_count == 2


def test_mle_of_constant_samples_has_zero_spread():
    fit = mle_gaussian(np.full((5, 2), 0.3))
    assert np.allclose(fit.mean, 0.3)
    assert np.allclose(fit.std, 0.0)


def test_mle_needs_two_samples():
    with pytest.raises(InsufficientDataError):
        mle_gaussian([1.0])


def test_mle_recovers_gaussian_parameters():
    samples = 0.3 + 0.2 * derive_rng(11, "mle").standard_normal(100_000)
    fit = mle_gaussian(samples)
    assert abs(fit.mean[0] - 0.3) < 0.01
    assert abs(fit.std[0] - 0.2) < 0.01


@pytest.fixture
def room_grids(room_net):
    room = room_net.subsystems[0]
    qx = Quantizer(room.state_set, 0.1)
    qd = Quantizer(room.disturbance_set, 0.5)
    return room, qx, qd


def _noise_free_successor_cells(room, qx, qd):
    states, dists, inputs = qx.centers(), qd.centers(), room.input_set.points
    expected = np.zeros((qx.num_cells, inputs.shape[0], qd.num_cells), dtype=int)
    for i, x in enumerate(states):
        for u, nu in enumerate(inputs):
            for j, d in enumerate(dists):
                nxt = room.step(x[None], nu[None], d[None], room.noise.zeros(1))
                expected[i, u, j] = qx.index(nxt)[0][0]
    return expected


@pytest.mark.parametrize("mode, samples", [("empirical", 3), ("gaussian-mle", 2)])
def test_noise_free_kernel_rows_are_one_hot(quiet_room_net, mode, samples):
    room = quiet_room_net.subsystems[0]
    qx = Quantizer(room.state_set, 0.1)
    qd = Quantizer(room.disturbance_set, 0.5)
    mdp = estimate_kernel(room, qx, qd, samples, seed=1, mode=mode)
    assert mdp.kernel.shape == (10, 5, 4, 10)
    assert np.allclose(mdp.kernel.max(axis=-1), 1.0)
    assert np.array_equal(mdp.kernel.argmax(axis=-1), _noise_free_successor_cells(room, qx, qd))


def test_noisy_kernel_rows_are_stochastic(room_grids):
    room, qx, qd = room_grids
    mdp = estimate_kernel(room, qx, qd, 200, seed=3)
    assert np.all(mdp.kernel >= 0)
    assert np.max(np.abs(mdp.kernel.sum(axis=-1) - 1.0)) <= 1e-9
    assert np.all(mdp.outside <= mdp.kernel + 1e-12)


def test_kernel_does_not_depend_on_the_worker_count(room_grids):
    room, qx, qd = room_grids
    one = estimate_kernel(room, qx, qd, 20, seed=8, workers=1)
    four = estimate_kernel(room, qx, qd, 20, seed=8, workers=4)
    assert one.provenance_hash() == four.provenance_hash()


def test_kernel_argument_validation(room_grids):
    room, qx, qd = room_grids
    with pytest.raises(PreconditionError):
        estimate_kernel(room, qx, qd, 0, seed=0)
    with pytest.raises(ConfigurationError):
        estimate_kernel(room, qx, qd, 5, seed=0, mode="histogram")
    with pytest.raises(InsufficientDataError):
        estimate_kernel(room, qx, qd, 1, seed=0, mode="gaussian-mle")


def test_finite_mdp_file_carries_its_provenance(room_grids, tmp_path):
    room, qx, qd = room_grids
    mdp = estimate_kernel(room, qx, qd, 10, seed=2)
    path = tmp_path / "room.mdp"
    provenance = write_finite_mdp(mdp, path)
    loaded = read_finite_mdp(path, expected_provenance=provenance)
    assert np.array_equal(loaded.kernel, mdp.kernel)
    assert loaded.provenance_hash() == provenance
    with pytest.raises(ConfigurationError):
        read_finite_mdp(path, expected_provenance="0" * 64)


@pytest.mark.slow
def test_gaussian_fit_and_counting_agree_on_gaussian_noise(room_grids):
    room, qx, qd = room_grids
    counted = estimate_kernel(room, qx, qd, 100_000, seed=5, mode="empirical")
    fitted = estimate_kernel(room, qx, qd, 100_000, seed=5, mode="gaussian-mle")
    total_variation = 0.5 * np.abs(counted.kernel - fitted.kernel).sum(axis=-1)
    assert total_variation.max() <= 0.02
