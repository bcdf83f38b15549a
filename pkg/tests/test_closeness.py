"""
Tests for the closeness bound, binomial intervals and paired validation.
"""
import numpy as np
import pytest

from mdpcert.abstraction.product import ProductAbstraction
from mdpcert.abstraction.quantizer import Quantizer
from mdpcert.closeness.bound import (
    ClosenessQuery,
    clopper_pearson,
    delta_bound,
    delta_table,
    half_width,
)
from mdpcert.closeness.validation import empirical_violation
from mdpcert.errors import ParameterError, PreconditionError, UnsupportedHorizonError
from mdpcert.utils.rng import derive_rng


def _query(**overrides):
    values = dict(epsilon=1.0, horizon=2, v0=0.2, gamma=1.0, alpha=0.5, varpi=0.5)
    values.update(overrides)
    return ClosenessQuery(**values)


def test_first_case_example():
    bound = delta_bound(_query())
    assert bound.branch == "case1"
    assert bound.delta == pytest.approx(0.8)
    assert bound.case1 == pytest.approx(0.8)


def test_infinite_horizon_without_drift():
    assert delta_bound(_query(v0=0.0, varpi=0.0, horizon=None)).delta == 0.0
    bound = delta_bound(_query(varpi=0.0, horizon=None))
    assert bound.branch == "infinite"
    assert bound.delta == pytest.approx(0.2)


def test_infinite_horizon_with_drift_is_unsupported():
    with pytest.raises(UnsupportedHorizonError):
        delta_bound(_query(horizon=None))


def test_second_case_below_the_switch():
    # g = 1 < varpi / (1 - alpha) = 1.2
    bound = delta_bound(_query(varpi=0.6, v0=0.1, horizon=1))
    assert bound.branch == "case2"
    assert bound.delta == pytest.approx(0.1 * 0.5 + 0.6 / 0.5 * (1 - 0.5))


def test_delta_is_clamped():
    bound = delta_bound(_query(v0=5.0))
    assert bound.raw > 1
    assert bound.delta == 1.0


@pytest.mark.parametrize("overrides", [
    {"epsilon": 0.0}, {"alpha": 1.0}, {"alpha": 0.0}, {"gamma": 0.0}, {"varpi": -0.1}, {"v0": -1.0}, {"horizon": -1},
])
def test_invalid_queries(overrides):
    with pytest.raises(ParameterError):
        _query(**overrides)


def test_branches_meet_at_the_switch():
    # varpi / (1 - alpha) = gamma eps^2 exactly
    q = _query(epsilon=1.0, gamma=1.0, alpha=0.5, varpi=0.5, v0=0.3, horizon=4)
    bound = delta_bound(q)
    assert bound.case1 == pytest.approx(bound.case2)


def _random_query(rng):
    return ClosenessQuery(
        epsilon=float(rng.uniform(0.01, 2.0)),
        horizon=int(rng.integers(1, 21)),
        v0=float(rng.uniform(0.0, 5.0)),
        gamma=float(rng.uniform(0.01, 100.0)),
        alpha=float(rng.uniform(0.01, 0.99)),
        varpi=float(rng.uniform(0.0, 5.0)),
    )


def _grown(q, field, factor):
    values = dict(epsilon=q.epsilon, horizon=q.horizon, v0=q.v0, gamma=q.gamma, alpha=q.alpha, varpi=q.varpi)
    if field == "horizon":
        values[field] = q.horizon + 1
    else:
        values[field] = values[field] * factor + (0.01 if field in ("v0", "varpi") else 0.0)
    return ClosenessQuery(**values)


def test_bound_monotonicity_over_random_queries():
    rng = derive_rng(13, "closeness")
    tol = 1e-12
    for _ in range(10_000):
        q = _random_query(rng)
        bound = delta_bound(q)
        factor = float(1.0 + rng.uniform(0.01, 1.0))
        assert 0.0 <= bound.delta <= 1.0
        assert bound.branch == ("case1" if q.gamma * q.epsilon ** 2 >= q.varpi / (1 - q.alpha) else "case2")
        assert delta_bound(_grown(q, "epsilon", factor)).delta <= bound.delta + tol
        assert delta_bound(_grown(q, "gamma", factor)).delta <= bound.delta + tol
        assert delta_bound(_grown(q, "v0", factor)).delta >= bound.delta - tol
        assert delta_bound(_grown(q, "varpi", factor)).delta >= bound.delta - tol
        if bound.branch == "case1":
            assert delta_bound(_grown(q, "horizon", factor)).delta >= bound.delta - tol


def test_delta_table_skips_unsupported_cells():
    rows = delta_table(gamma=1.0, alpha=0.5, varpi=0.5, v0=0.2, epsilons=[0.5, 1.0], horizons=[2, None])
    assert [(r["epsilon"], r["horizon"]) for r in rows] == [(0.5, 2), (1.0, 2)]
    rows = delta_table(gamma=1.0, alpha=0.5, varpi=0.0, v0=0.2, epsilons=[1.0], horizons=[None])
    assert rows[0]["horizon"] == "inf"
    assert rows[0]["delta"] == pytest.approx(0.2)


def test_clopper_pearson_known_interval():
    lower, upper = clopper_pearson(5, 10, 0.95)
    assert lower == pytest.approx(0.1871, abs=1e-4)
    assert upper == pytest.approx(0.8129, abs=1e-4)
    assert half_width((lower, upper)) == pytest.approx(0.3129, abs=1e-4)


def test_clopper_pearson_edges():
    assert clopper_pearson(0, 20)[0] == 0.0
    assert clopper_pearson(20, 20)[1] == 1.0
    with pytest.raises(PreconditionError):
        clopper_pearson(3, 2)


@pytest.fixture
def product(room_net):
    qxs = tuple(Quantizer(s.state_set, 0.1) for s in room_net.subsystems)
    qds = tuple(Quantizer(s.disturbance_set, 0.5) for s in room_net.subsystems)
    return ProductAbstraction(room_net, qxs, qds)


def test_validation_counts_every_trial_for_tiny_epsilon(product):
    # the midpoint 0 sits on a cell boundary, so the abstraction starts 0.05 away per room
    result = empirical_violation(product, None, epsilon=1e-9, horizon=3, trials=50, seed=1)
    assert result.violations == 50
    assert result.frequency == 1.0
    assert np.all(result.sup_mismatch >= np.sqrt(3) * 0.05 - 1e-12)


def test_validation_counts_nothing_for_huge_epsilon(product, tmp_path):
    result = empirical_violation(product, None, epsilon=1e6, horizon=3, trials=50, seed=1)
    assert result.violations == 0
    assert result.interval[0] == 0.0
    result.write(tmp_path / "trials.csv", tmp_path / "summary.json")
    assert len((tmp_path / "trials.csv").read_text().splitlines()) == 51


def test_validation_is_reproducible(product):
    a = empirical_violation(product, None, epsilon=0.1, horizon=4, trials=30, seed=7)
    b = empirical_violation(product, None, epsilon=0.1, horizon=4, trials=30, seed=7)
    assert np.array_equal(a.sup_mismatch, b.sup_mismatch)


def test_validation_needs_trials(product):
    with pytest.raises(PreconditionError):
        empirical_violation(product, None, epsilon=0.1, horizon=2, trials=0, seed=0)
