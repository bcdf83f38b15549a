"""
Report bundle writer.

Everything under the run directory except `metadata/` is a deterministic
function of configuration and seed; timestamps, timings and the metrics
snapshot live in `metadata/`. `manifest.json` lists every deterministic file
with its sha256.
"""
import csv
import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from mdpcert.abstraction.kernel import write_finite_mdp
from mdpcert.certification.certificate import write_certificates
from mdpcert.config import settings
from mdpcert.errors import ExitCode
from mdpcert.observability import metrics
from mdpcert.scenario.sop import write_solution
from mdpcert.synthesis.safety import RolloutResult, write_policy

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
METADATA_DIR = "metadata"
DELTA_COLUMNS = ["epsilon", "horizon", "delta", "raw", "branch", "case1", "case2"]


def _write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_delta_csv(rows: Sequence[Dict[str, Any]], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=DELTA_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in DELTA_COLUMNS})
    return path


def emit_plots_data(
    run_dir: Path,
    rollout: Optional[RolloutResult],
    names: Sequence[str],
    state_offsets: Sequence[int],
    safe_bands: Sequence[Tuple[np.ndarray, np.ndarray]]
) -> List[Path]:
    """
    Trajectory CSVs for closed-loop figures.

    One file per subsystem, `plots/trajectories_<name>.csv`, with a `step`
    column and one column per recorded trial (per state dimension when n > 1),
    T + 1 rows; `plots/safe_bands.csv` annotates the safe interval per
    subsystem dimension.

    Returns:
        Written paths; empty (with a logged notice) when no trajectories were recorded
    """
    if rollout is None or rollout.trajectories is None or rollout.trajectories.size == 0:
        logger.warning("No recorded trajectories: plot data not emitted")
        return []
    trajectories = rollout.trajectories           # (R, T + 1, sum n)
    trials, steps, _ = trajectories.shape
    plots = Path(run_dir) / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    written = []
    for i, name in enumerate(names):
        block = trajectories[:, :, state_offsets[i]:state_offsets[i + 1]]
        dims = block.shape[2]
        header = ["step"] + [
            f"trial_{t}" if dims == 1 else f"trial_{t}_x{j}" for t in range(trials) for j in range(dims)
        ]
        path = plots / f"trajectories_{name}.csv"
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for k in range(steps):
                writer.writerow([k] + [repr(float(v)) for v in block[:, k, :].ravel()])
        written.append(path)

    bands = plots / "safe_bands.csv"
    with bands.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["subsystem", "dim", "lower", "upper"])
        for name, (lower, upper) in zip(names, safe_bands):
            for j, (lo, hi) in enumerate(zip(lower, upper)):
                writer.writerow([name, j, repr(float(lo)), repr(float(hi))])
    written.append(bands)
    logger.info(f"Plot data for {len(names)} subsystem(s), {trials} trial(s) written to {plots}")
    return written


class BundleWriter:
    """Writes the artifacts present in a final pipeline state."""

    def __init__(self, run_dir: Path, cfg, seed: int, workers: int = 1):
        self.run_dir = Path(run_dir)
        self.cfg = cfg
        self.seed = seed
        self.workers = workers
        self.files: List[Path] = []
        self.notices: List[str] = []

    def _track(self, *paths: Path) -> None:
        self.files.extend(paths)

    def write(self, state: Dict[str, Any], exit_code: ExitCode, started_at: datetime) -> Dict[str, Any]:
        run = self.run_dir
        run.mkdir(parents=True, exist_ok=True)
        self._track(_write_json(run / "config.json", self.cfg.model_dump(mode="json")))

        net = state.get("network")
        groups = state.get("groups", [])
        members = {g["key"]: [net.subsystems[i].name for i in g["members"]] for g in groups} if net else {}

        for key, solution in sorted(state.get("solutions", {}).items()):
            group = next(g for g in groups if g["key"] == key)
            path = run / "scenario" / f"{key}.json"
            write_solution(solution, path, self.cfg.sop_for(group["members"][0]), extra={
                "seed": self.seed,
                "group_seed": group["seed"],
                "members": members.get(key, []),
                "sample_plan": state.get("sample_plan", {}).get(key),
                "max_sampled_excess": state.get("solution_checks", {}).get(key),
            })
            self._track(path)

        certificates = [c for c in state.get("certificates") or [] if c is not None]
        if certificates:
            path = run / "certificates.json"
            write_certificates(certificates, path)
            self._track(path)

        if state.get("composition") is not None:
            self._track(_write_json(run / "composition.json", {**state["composition"].report(), "seed": self.seed}))
        elif state.get("rejection") is not None:
            rejection = state["rejection"]
            self._track(_write_json(run / "composition_rejected.json", {
                "reason": rejection.reason,
                "lambda_max": None if np.isnan(rejection.lambda_max) else rejection.lambda_max,
                "uncertified": rejection.uncertified,
                "seed": self.seed,
            }))

        if state.get("delta_rows"):
            self._track(write_delta_csv(state["delta_rows"], run / "closeness" / "delta.csv"))
            self._track(_write_json(run / "closeness" / "summary.json", {"v0": state.get("v0"), "seed": self.seed}))

        for key, mdp in sorted(state.get("mdps", {}).items()):
            path = run / "abstraction" / f"{key}.mdp"
            write_finite_mdp(mdp, path)
            self._track(path)
        for key, policy in sorted(state.get("policies", {}).items()):
            path = run / "policies" / f"{key}.json"
            write_policy(policy, path)
            self._track(path)
        if state.get("self_rollouts"):
            self._track(_write_json(run / "synthesis" / "self_rollout.json", state["self_rollouts"]))

        if state.get("validation") is not None:
            csv_path = run / "validation" / "closeness_trials.csv"
            summary_path = run / "validation" / "closeness_summary.json"
            state["validation"].write(csv_path, summary_path)
            self._track(csv_path, summary_path)
        rollout = state.get("rollout")
        if rollout is not None:
            self._track(_write_json(run / "validation" / "rollout_summary.json", rollout.summary()))
        if net is not None and state.get("policies"):
            bands = [
                (spec.safe_set.lower, spec.safe_set.upper)
                for spec in (self.cfg.safety.spec_for(sub) for sub in net.subsystems)
            ]
            plotted = emit_plots_data(run, rollout, [s.name for s in net.subsystems], net.state_offsets, bands)
            if not plotted:
                self.notices.append("no trajectories recorded; plot data not emitted")
            self._track(*plotted)

        if state.get("comparisons"):
            self._track(_write_json(run / "comparisons.json", state["comparisons"]))
        if state.get("failure"):
            self._track(_write_json(run / "failure.json", state["failure"]))

        manifest = {
            "name": self.cfg.name,
            "seed": self.seed,
            "exit_code": int(exit_code),
            "exit_status": exit_code.name,
            "stages": state.get("nodes_executed", []),
            "resumed": bool(state.get("resumed", False)),
            "notices": self.notices,
            "files": {str(p.relative_to(run)): _sha256(p) for p in sorted(set(self.files))},
        }
        _write_json(run / MANIFEST_FILE, manifest)
        self._write_metadata(state, exit_code, started_at)
        logger.info(f"Report bundle with {len(manifest['files'])} file(s) written to {run}")
        return {"run_dir": str(run), "manifest": manifest}

    def _write_metadata(self, state: Dict[str, Any], exit_code: ExitCode, started_at: datetime) -> None:
        meta = self.run_dir / METADATA_DIR
        _write_json(meta / "metadata.json", {
            "started_at": started_at.isoformat(),
            "finished_at": datetime.now(timezone.utc).isoformat(),
            "timings": state.get("timings", {}),
            "cache_hits": state.get("cache_hits", {}),
            "exit_code": int(exit_code),
            "workers": self.workers,
        })
        metrics.write_snapshot(meta / settings.metrics_filename)
