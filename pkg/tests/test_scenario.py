"""
Tests for sample-size laws, templates, scenario data and the sampled program.
"""
import math

import numpy as np
import pytest

from mdpcert.abstraction.quantizer import Quantizer
from mdpcert.errors import InsufficientDataError, PreconditionError, UnboundedSampleSizeError
from mdpcert.numerics.special import log_binomial_tail
from mdpcert.scenario.dataset import ScenarioDataset, draw_scenario_data
from mdpcert.scenario.sample_size import required_realizations, required_sample_count
from mdpcert.scenario.sop import (
    AlphaOutcome,
    ScenarioSolution,
    SopConfig,
    SopInfeasible,
    SopSolver,
    VariableBoxes,
    assemble_and_solve_sop,
    direct_constraint_values,
    estimate_variance_bound,
    select_outcome,
    verify_solution,
)
from mdpcert.scenario.templates import (
    PolynomialTemplate,
    QuadraticTemplate,
    decision_variable_count,
    make_template,
)
from mdpcert.utils.rng import derive_rng
from tests.conftest import scalar_linear


# sample sizes

def test_single_variable_sample_count():
    # 0.95^N <= 0.01
    assert required_sample_count([0.05], 0.01, c=1) == 90


def test_trivial_confidence_needs_no_samples():
    assert required_sample_count([0.05], 1.0, c=12) == 0
    assert required_sample_count([0.05], 3.0, c=12, l=3) == 0


def test_zero_scenario_parameter_is_unbounded():
    with pytest.raises(UnboundedSampleSizeError):
        required_sample_count([0.0], 0.5, c=1)
    with pytest.raises(UnboundedSampleSizeError):
        required_sample_count([0.0, 0.1], 0.5, c=1, l=2)


def test_sample_count_is_minimal_for_the_room_program():
    template = PolynomialTemplate(1, (4, 2), True)
    c = decision_variable_count(template, n=1, p=2)
    assert c == 12
    N = required_sample_count([0.025], 1e-4, c=c)
    assert log_binomial_tail(N, c, 0.025) <= math.log(1e-4)
    assert log_binomial_tail(N - 1, c, 0.025) > math.log(1e-4)


def _exact_sample_count(numerators, q, c, limit=600):
    """Smallest N with q * sum_t sum_{i<c} C(N,i) a_t^i (20-a_t)^(N-i) <= 20^N."""
    for N in range(c, limit):
        total = sum(
            math.comb(N, i) * a ** i * (20 - a) ** (N - i)
            for a in numerators
            for i in range(min(c, N + 1))
        )
        if q * total <= 20 ** N:
            return N
    return None


def test_sample_count_agrees_with_exact_rational_arithmetic():
    rng = derive_rng(17, "sample-size")
    checked = 0
    while checked < 300:
        l = int(rng.integers(1, 4))
        numerators = [int(a) for a in rng.integers(2, 11, size=l)]
        q = int(rng.choice([10, 20, 100, 1000]))
        c = int(rng.integers(1, 9))
        if q * l <= 1:
            continue
        expected = _exact_sample_count(numerators, q, c)
        if expected is None:
            continue
        eps = [a / 20 for a in numerators]
        assert required_sample_count(eps, 1.0 / q, c, l) == expected
        checked += 1


def test_sample_count_monotonicity():
    base = required_sample_count([0.05], 1e-3, c=6)
    assert required_sample_count([0.1], 1e-3, c=6) <= base
    assert required_sample_count([0.05], 1e-6, c=6) >= base
    assert required_sample_count([0.05], 1e-3, c=6, l=3) >= base


@pytest.mark.parametrize("C, beta1, mu, expected", [
    (1.0, 0.1, 0.5, 40),
    (0.0, 0.1, 0.5, 1),
    (6.43e-4, 1e-4, 0.1, 643),
])
def test_realization_count(C, beta1, mu, expected):
    assert required_realizations(C, beta1, mu) == expected


def test_realization_count_needs_positive_mu():
    with pytest.raises(PreconditionError):
        required_realizations(1.0, 0.1, 0.0)


def test_chebyshev_realization_count_holds_empirically():
    C, beta1, mu = 1.0, 0.1, 0.5
    L = required_realizations(C, beta1, mu)
    means = derive_rng(3, "chebyshev").normal(0.0, math.sqrt(C), size=(10_000, L)).mean(axis=1)
    frequency = float(np.mean(np.abs(means) > mu))
    assert frequency <= beta1 + 3 * math.sqrt(beta1 * (1 - beta1) / 10_000)


# templates

def test_polynomial_template_basis_and_size():
    template = PolynomialTemplate(1, (4, 2), True)
    assert template.z == 3
    basis = template.basis(np.array([[0.5]]), np.array([[0.0]]))
    assert np.allclose(basis, [[0.0625, 0.25, 1.0]])
    assert template.quadratic_form([1.0, 2.0, 3.0]) is None
    assert np.allclose(PolynomialTemplate(2, (2,), False).quadratic_form([1.0, 2.0]), np.diag([1.0, 2.0]))


def test_quadratic_template_reproduces_its_form():
    template = QuadraticTemplate(2, constant=True)
    kappa = [1.0, 0.5, 2.0, 3.0]
    P = template.quadratic_form(kappa)
    assert np.allclose(P, [[1.0, 0.5], [0.5, 2.0]])
    x, xh = np.array([[0.3, -0.2]]), np.array([[0.1, 0.1]])
    delta = (x - xh)[0]
    assert template.value(kappa, x, xh)[0] == pytest.approx(delta @ P @ delta + 3.0)
    assert make_template(template.describe()).z == template.z


# scenario data

@pytest.fixture
def room_data(room_net):
    room = room_net.subsystems[0]
    qx = Quantizer(room.state_set, 0.25)
    qd = Quantizer(room.disturbance_set, 0.5)
    return room, qx, qd


def test_dataset_shape_and_pair_count(room_data):
    room, qx, qd = room_data
    data = draw_scenario_data(room, 3, 2, qx, qd, seed=1)
    assert data.successors.shape == (3, 5, 2, 1)
    assert data.pair_count == 3 * 5 * 4 * 4 * 2
    assert data.abstract_successors(0, 0).shape == (4, 4, 2, 1)


def test_dataset_does_not_depend_on_the_worker_count(room_data):
    room, qx, qd = room_data
    one = draw_scenario_data(room, 6, 3, qx, qd, seed=4, workers=1)
    three = draw_scenario_data(room, 6, 3, qx, qd, seed=4, workers=3)
    other = draw_scenario_data(room, 6, 3, qx, qd, seed=5, workers=1)
    assert one.dataset_hash() == three.dataset_hash()
    assert one.dataset_hash() != other.dataset_hash()


def test_scenario_states_are_uniform(room_data):
    room, qx, qd = room_data
    data = draw_scenario_data(room, 2000, 1, qx, qd, seed=6)
    assert abs(float(data.x_bar.mean())) <= 4 * (1 / math.sqrt(12)) / math.sqrt(2000)
    assert np.all(np.abs(data.x_bar) <= 0.5)


def test_dataset_needs_samples(room_data):
    room, qx, qd = room_data
    with pytest.raises(PreconditionError):
        draw_scenario_data(room, 0, 1, qx, qd, seed=0)


# sampled program

def _single_point_dataset():
    """One sample sitting exactly on the only grid center of a scalar system."""
    sys = scalar_linear(a=0.5)
    qx = Quantizer(sys.state_set, 2.0)
    qd = Quantizer(sys.disturbance_set, 2.0)
    zeros = np.zeros((1, 1, 1, 1))
    return ScenarioDataset(
        sys=sys, qx=qx, qd=qd, x_bar=np.zeros((1, 1)), d_bar=np.zeros((1, 1)),
        noise=zeros, successors=zeros.copy(), seed=0,
    )


def _single_point_config(alpha_grid, psi=(-100.0, 100.0)):
    return SopConfig(
        alpha_grid=alpha_grid,
        mu=0.0,
        boxes=VariableBoxes(
            kappa=(0.0, 10.0), gamma=(0.1, 10.0), varpi=(0.0, 10.0),
            z11=(0.0, 0.0), z12=(0.0, 0.0), z22=(0.0, 0.0), psi=psi,
        ),
    )


def test_single_sample_program_optimum():
    template = PolynomialTemplate(1, (), True)
    data = _single_point_dataset()
    solution = assemble_and_solve_sop(template, _single_point_config([0.5]), data)
    assert isinstance(solution, ScenarioSolution)
    assert solution.psi_star == pytest.approx(-20.0 / 3.0, abs=1e-7)
    assert solution.kappa[0] == pytest.approx(20.0 / 3.0, abs=1e-7)
    assert solution.varpi == pytest.approx(10.0, abs=1e-7)
    assert np.allclose(solution.Z, 0.0)
    assert verify_solution(solution, template, data) <= 1e-8


def test_alpha_selection_prefers_smallest_psi_or_smallest_certifiable_alpha():
    template = PolynomialTemplate(1, (), True)
    data = _single_point_dataset()
    cfg = _single_point_config([0.5, 0.9])
    # psi*(0.5) = -20/3, psi*(0.9) = -10/1.1
    assert assemble_and_solve_sop(template, cfg, data).alpha_star == 0.9
    assert assemble_and_solve_sop(template, cfg, data, certifiable_threshold=-5.0).alpha_star == 0.5
    assert assemble_and_solve_sop(template, cfg, data, certifiable_threshold=-8.0).alpha_star == 0.9
    assert assemble_and_solve_sop(template, cfg, data, certifiable_threshold=-100.0).alpha_star == 0.9
    solution = assemble_and_solve_sop(template, cfg, data)
    assert [row["alpha"] for row in solution.per_alpha] == [0.5, 0.9]


def test_select_outcome_tie_breaks():
    outcomes = [
        AlphaOutcome(alpha=0.9, status="optimal", psi=-1.0, varpi=2.0),
        AlphaOutcome(alpha=0.95, status="optimal", psi=-1.0, varpi=1.0),
        AlphaOutcome(alpha=0.99, status="infeasible"),
    ]
    assert select_outcome(outcomes).alpha == 0.9
    assert select_outcome(outcomes, certifiable_threshold=0.0).alpha == 0.9
    assert select_outcome([AlphaOutcome(alpha=0.9, status="infeasible")]) is None


def test_boxes_that_exclude_every_solution_are_infeasible():
    template = PolynomialTemplate(1, (), True)
    result = assemble_and_solve_sop(template, _single_point_config([0.5], psi=(-100.0, -50.0)), _single_point_dataset())
    assert isinstance(result, SopInfeasible)
    assert result.per_alpha[0]["status"] == "infeasible"


def test_room_program_is_feasible_and_satisfies_every_sample(room_data):
    room, qx, qd = room_data
    template = PolynomialTemplate(1, (4, 2), True)
    data = draw_scenario_data(room, 5, 5, qx, qd, seed=12)
    solution = assemble_and_solve_sop(template, SopConfig(alpha_grid=[0.9, 0.99]), data)
    assert isinstance(solution, ScenarioSolution)
    assert solution.alpha_star in (0.9, 0.99)
    assert solution.N_used == 5 and solution.L_used == 5
    assert solution.gamma > 0
    assert np.allclose(solution.Z, solution.Z.T)
    assert verify_solution(solution, template, data) <= 1e-7
    assert ScenarioSolution.from_dict(solution.to_dict()).psi_star == solution.psi_star


def test_assembled_rows_match_direct_evaluation(room_data):
    room, qx, qd = room_data
    template = PolynomialTemplate(1, (4, 2), True)
    data = draw_scenario_data(room, 3, 4, qx, qd, seed=2)
    cfg = SopConfig(alpha_grid=[0.95])
    solver = SopSolver(template, cfg, data)
    rng = derive_rng(0, "rows")
    for _ in range(5):
        y = rng.normal(size=solver.layout.size)
        assembled = np.concatenate(solver.violations(y, 0.95))
        direct = direct_constraint_values(template, data, 0.95, cfg.mu, y)
        assert np.allclose(assembled, direct, atol=1e-10)


def test_constraints_are_affine_in_every_decision_variable(room_data):
    room, qx, qd = room_data
    template = PolynomialTemplate(1, (4, 2), True)
    data = draw_scenario_data(room, 3, 4, qx, qd, seed=3)
    size = decision_variable_count(template, room.n, room.p)
    y = derive_rng(1, "affine").normal(size=size)
    base = direct_constraint_values(template, data, 0.9, 0.1, y)
    for k in range(size):
        step = np.zeros(size)
        step[k] = 1.0
        up = direct_constraint_values(template, data, 0.9, 0.1, y + step)
        down = direct_constraint_values(template, data, 0.9, 0.1, y - step)
        assert np.allclose(up - 2 * base + down, 0.0, atol=1e-8)


def test_wider_boxes_never_increase_the_optimum(room_data):
    room, qx, qd = room_data
    template = PolynomialTemplate(1, (4, 2), True)
    data = draw_scenario_data(room, 4, 4, qx, qd, seed=9)
    narrow = SopConfig(alpha_grid=[0.9], boxes=VariableBoxes(kappa=(-1.0, 1.0), varpi=(0.0, 1.0)))
    wide = SopConfig(alpha_grid=[0.9], boxes=VariableBoxes(kappa=(-10.0, 10.0), varpi=(0.0, 10.0)))
    psi_narrow = assemble_and_solve_sop(template, narrow, data).psi_star
    psi_wide = assemble_and_solve_sop(template, wide, data).psi_star
    assert psi_wide <= psi_narrow + 1e-9


def test_constraint_generation_matches_the_direct_solve(room_data):
    room, qx, qd = room_data
    template = PolynomialTemplate(1, (4, 2), True)
    data = draw_scenario_data(room, 4, 3, qx, qd, seed=10)
    direct = assemble_and_solve_sop(template, SopConfig(alpha_grid=[0.95]), data)
    cuts = assemble_and_solve_sop(template, SopConfig(alpha_grid=[0.95], row_budget=40), data)
    assert cuts.psi_star == pytest.approx(direct.psi_star, abs=1e-6)
    assert verify_solution(cuts, template, data) <= 1e-7


def test_variance_bound_needs_two_realizations(room_data):
    room, qx, qd = room_data
    template = PolynomialTemplate(1, (4, 2), True)
    kappa = np.array([1.0, 1.0, 0.0])
    with pytest.raises(InsufficientDataError):
        estimate_variance_bound(template, kappa, draw_scenario_data(room, 2, 1, qx, qd, seed=0))
    bound = estimate_variance_bound(template, kappa, draw_scenario_data(room, 2, 10, qx, qd, seed=0))
    assert bound > 0


@pytest.mark.slow
def test_room_program_at_full_sample_size_is_mostly_nonpositive(room_data):
    room, qx, qd = room_data
    template = PolynomialTemplate(1, (4, 2), True)
    N = required_sample_count([0.025], 1e-4, decision_variable_count(template, 1, 2))
    nonpositive = 0
    for seed in range(10):
        data = draw_scenario_data(room, N, 20, qx, qd, seed=seed)
        solution = assemble_and_solve_sop(template, SopConfig(alpha_grid=[0.99]), data)
        nonpositive += int(solution.psi_star <= 0)
    assert nonpositive >= 8
