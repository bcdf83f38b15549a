"""
Tests for the bundle writers, reported-figure comparisons and exit-code mapping.
"""
import csv

import numpy as np
import pytest

from mdpcert.errors import (
    ConfigurationError,
    EstimationError,
    ExitCode,
    NumericError,
    PreconditionError,
    ProvenanceError,
    UnsupportedHorizonError,
)
from mdpcert.nodes.base import exit_code_for, stage_failure
from mdpcert.reports.reference import ROOM_CASE_STUDY, compare_with_reported
from mdpcert.reports.writer import DELTA_COLUMNS, emit_plots_data, write_delta_csv
from mdpcert.synthesis.safety import RolloutResult


def _rollout(trials=2, steps=4, width=3):
    trajectories = np.arange(trials * steps * width, dtype=float).reshape(trials, steps, width)
    return RolloutResult(frequency=1.0, safe_trials=trials, trials=trials, interval=(0.5, 1.0),
                         trajectories=trajectories)


def _read(path):
    with path.open(newline="") as handle:
        return list(csv.reader(handle))


def test_plot_data_per_subsystem(tmp_path):
    bands = [(np.array([-0.5]), np.array([0.5])), (np.array([-1.0, -2.0]), np.array([1.0, 2.0]))]
    written = emit_plots_data(tmp_path, _rollout(), ["a", "b"], [0, 1, 3], bands)
    assert [p.name for p in written] == ["trajectories_a.csv", "trajectories_b.csv", "safe_bands.csv"]

    rows = _read(tmp_path / "plots" / "trajectories_a.csv")
    assert rows[0] == ["step", "trial_0", "trial_1"]
    assert len(rows) == 1 + 4
    assert [float(v) for v in rows[1][1:]] == [0.0, 12.0]

    rows = _read(tmp_path / "plots" / "trajectories_b.csv")
    assert rows[0] == ["step", "trial_0_x0", "trial_0_x1", "trial_1_x0", "trial_1_x1"]
    assert [float(v) for v in rows[2][1:]] == [4.0, 5.0, 16.0, 17.0]

    rows = _read(tmp_path / "plots" / "safe_bands.csv")
    assert rows[0] == ["subsystem", "dim", "lower", "upper"]
    assert rows[3] == ["b", "1", "-2.0", "2.0"]


def test_no_trajectories_means_no_plot_data(tmp_path):
    assert emit_plots_data(tmp_path, None, ["a"], [0, 1], []) == []
    empty = RolloutResult(frequency=1.0, safe_trials=1, trials=1, interval=(0.0, 1.0), trajectories=None)
    assert emit_plots_data(tmp_path, empty, ["a"], [0, 1], []) == []
    assert not (tmp_path / "plots").exists()


def test_delta_csv(tmp_path):
    rows = [
        {"epsilon": 0.5, "horizon": 5, "delta": 0.2, "raw": 0.2, "branch": "case1", "case1": 0.2, "case2": 0.3},
        {"epsilon": 0.5, "horizon": "inf", "delta": 0.1, "raw": 0.1, "branch": "infinite", "case1": None, "case2": None},
    ]
    path = write_delta_csv(rows, tmp_path / "closeness" / "delta.csv")
    content = _read(path)
    assert content[0] == DELTA_COLUMNS
    assert content[2][DELTA_COLUMNS.index("case1")] == ""
    assert content[2][DELTA_COLUMNS.index("horizon")] == "inf"


def test_comparison_records():
    record = compare_with_reported("sample_count", 911, rel_tol=0.0, abs_tol=0.5)
    assert record["matches"]
    record = compare_with_reported("gamma_composed", 1.41, note="harmonic sum")
    assert not record["matches"]
    assert record["reported"] == ROOM_CASE_STUDY["gamma_composed"]
    assert record["note"] == "harmonic sum"
    custom = compare_with_reported("x", 1.0005, reported={"x": 1.0})
    assert custom["matches"]


def test_comparison_logs_discrepancies(caplog):
    with caplog.at_level("WARNING", logger="mdpcert.reports.reference"):
        compare_with_reported("psi_star", -0.25)
    assert "noted discrepancy" in caplog.text


@pytest.mark.parametrize("exc, code", [
    (ConfigurationError("x"), ExitCode.CONFIG_ERROR),
    (UnsupportedHorizonError("x"), ExitCode.CONFIG_ERROR),
    (ProvenanceError("x"), ExitCode.INSUFFICIENT_DATA),
    (NumericError("x"), ExitCode.NUMERIC_ERROR),
    (EstimationError("x"), ExitCode.NUMERIC_ERROR),
    (PreconditionError("x"), ExitCode.TOOL_ERROR),
    (RuntimeError("x"), ExitCode.TOOL_ERROR),
])
def test_exit_code_mapping(exc, code):
    assert exit_code_for(exc) == code


def test_stage_failure_record():
    update = stage_failure("scenario", ExitCode.SOP_INFEASIBLE, "no feasible alpha", group="g0")
    assert update["failure"] == {
        "stage": "scenario", "exit_code": 4, "reason": "no feasible alpha", "details": {"group": "g0"},
    }
