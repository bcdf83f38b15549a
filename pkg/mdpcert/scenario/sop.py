"""
Sampled storage-function program, solved as one LP per alpha grid point.

Decision vector y = [gamma, varpi, kappa_1..kappa_z, Z upper triangle, psi],
minimizing psi subject to, for every sample i, input nu and grid pair
(xh, dh):

    gamma |x_i - xh|^2 - S(kappa, x_i, xh)                         <= psi
    mean_q S(kappa, f_q, fh_q) - alpha S(kappa, x_i, xh) - varpi
        + mu - w^T Z w                                              <= psi

with w = [d_i - dh; x_i - xh]. The first family does not depend on nu or dh
and is emitted once per (i, xh). Row matrices that exceed `row_budget` are
handled by constraint generation over the full sampled row set.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from mdpcert.config import settings
from mdpcert.errors import ConfigurationError, InsufficientDataError, NumericError
from mdpcert.numerics.lp import LinearProgram, LpResult, solve_lp, stack_rows
from mdpcert.observability import metrics
from mdpcert.scenario.dataset import ScenarioDataset
from mdpcert.scenario.templates import SstfTemplate, supply_rate_size

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]


class VariableBoxes(BaseModel):
    """Finite boxes on every decision variable."""
    kappa: Union[Interval, List[Interval]] = (-1e3, 1e3)
    gamma: Interval = (1e-3, 1e4)
    varpi: Interval = (0.0, 1e3)
    z11: Interval = (-1e2, 1e2)
    z12: Interval = (-1e2, 1e2)
    z22: Interval = (-1e2, 1e2)
    psi: Interval = (-1e4, 1e4)
    gamma_min: float = Field(1e-3, gt=0)


class SopConfig(BaseModel):
    alpha_grid: List[float] = Field(default_factory=lambda: [0.9, 0.95, 0.99])
    mu: float = Field(0.1, ge=0)
    beta1: float = Field(1e-4, gt=0, le=1)
    beta2: float = Field(1e-4, gt=0, le=1)
    eps2: List[float] = Field(default_factory=lambda: [0.025])
    variance_bound: Optional[float] = Field(None, ge=0)
    sample_count: Optional[int] = Field(None, ge=0, description="Override of the scenario count N")
    realizations: Optional[int] = Field(None, ge=1, description="Override of the realization count L")
    boxes: VariableBoxes = Field(default_factory=VariableBoxes)
    pilot_samples: int = Field(20, ge=1)
    pilot_realizations: int = Field(50, ge=2)
    variance_inflation: float = Field(1.5, ge=1)
    row_budget: int = Field(200_000, ge=1)
    max_cut_rounds: int = Field(200, ge=1)

    @field_validator("alpha_grid")
    @classmethod
    def _alpha_in_unit_interval(cls, value):
        if not value:
            raise ValueError("alpha grid must be nonempty")
        if any(not 0 < a < 1 for a in value):
            raise ValueError("alpha grid points must lie in (0, 1)")
        return value

    @field_validator("eps2")
    @classmethod
    def _eps_in_unit_interval(cls, value):
        if not value or any(not 0 <= e <= 1 for e in value):
            raise ValueError("eps2 must be a nonempty list in [0, 1]")
        return value

    def eps_per_alpha(self) -> List[float]:
        if len(self.eps2) == 1:
            return self.eps2 * len(self.alpha_grid)
        if len(self.eps2) != len(self.alpha_grid):
            raise ConfigurationError("eps2 needs one entry or one per alpha grid point")
        return list(self.eps2)


class DecisionLayout:
    """Index map of the decision vector."""

    def __init__(self, z: int, n: int, p: int):
        self.z, self.n, self.p = z, n, p
        self.tri_rows, self.tri_cols = np.triu_indices(n + p)
        self.nz = supply_rate_size(n, p)
        self.gamma = 0
        self.varpi = 1
        self.kappa = slice(2, 2 + z)
        self.zvec = slice(2 + z, 2 + z + self.nz)
        self.psi = 2 + z + self.nz
        self.size = self.psi + 1

    def bounds(self, boxes: VariableBoxes) -> Tuple[np.ndarray, np.ndarray]:
        lower = np.zeros(self.size)
        upper = np.zeros(self.size)
        lower[self.gamma] = max(boxes.gamma[0], boxes.gamma_min)
        upper[self.gamma] = boxes.gamma[1]
        lower[self.varpi] = max(boxes.varpi[0], 0.0)
        upper[self.varpi] = boxes.varpi[1]
        kappa = np.asarray(boxes.kappa, dtype=float).reshape(-1, 2)
        if kappa.shape[0] not in (1, self.z):
            raise ConfigurationError(f"kappa boxes need 1 or {self.z} intervals, got {kappa.shape[0]}")
        lower[self.kappa] = kappa[:, 0]
        upper[self.kappa] = kappa[:, 1]
        for k, (a, b) in enumerate(zip(self.tri_rows, self.tri_cols)):
            if b < self.p:
                box = boxes.z11
            elif a < self.p:
                box = boxes.z12
            else:
                box = boxes.z22
            lower[self.zvec.start + k], upper[self.zvec.start + k] = box
        lower[self.psi], upper[self.psi] = boxes.psi
        if np.any(lower > upper):
            raise ConfigurationError("a decision-variable box has lower > upper")
        return lower, upper

    def unpack_z(self, y: np.ndarray) -> np.ndarray:
        Z = np.zeros((self.n + self.p, self.n + self.p))
        Z[self.tri_rows, self.tri_cols] = y[self.zvec]
        return Z + np.triu(Z, 1).T

    def quadratic_features(self, w: np.ndarray) -> np.ndarray:
        """q_ab with w^T Z w = sum_{a<=b} z_ab q_ab."""
        scale = np.where(self.tri_rows == self.tri_cols, 1.0, 2.0)
        return w[..., self.tri_rows] * w[..., self.tri_cols] * scale


@dataclass
class SampleFeatures:
    """Alpha-independent quantities of one scenario sample."""
    dist2: np.ndarray    # (|Xh|,)
    H: np.ndarray        # (|Xh|, z)
    E: np.ndarray        # (|U|, |Xh|, |Dh|, z)
    Q: np.ndarray        # (|Xh|, |Dh|, nz)


def compute_features(template: SstfTemplate, data: ScenarioDataset, layout: DecisionLayout, i: int) -> SampleFeatures:
    xs, ds = data.state_grid, data.disturbance_grid
    x_i, d_i = data.x_bar[i], data.d_bar[i]
    H = template.basis(x_i[None, :], xs)
    dist2 = np.sum((x_i - xs) ** 2, axis=1)
    m_inputs = data.sys.input_set.size
    E = np.zeros((m_inputs, xs.shape[0], ds.shape[0], template.z))
    for u in range(m_inputs):
        fh = data.abstract_successors(i, u)
        E[u] = template.basis(data.successors[i, u][None, None], fh).mean(axis=2)
    w = np.concatenate([
        np.broadcast_to((d_i - ds)[None, :, :], (xs.shape[0], ds.shape[0], ds.shape[1])),
        np.broadcast_to((x_i - xs)[:, None, :], (xs.shape[0], ds.shape[0], xs.shape[1])),
    ], axis=-1)
    return SampleFeatures(dist2=dist2, H=H, E=E, Q=layout.quadratic_features(w))


def _storage_rows(feat: SampleFeatures, layout: DecisionLayout) -> Tuple[np.ndarray, np.ndarray]:
    A = np.zeros((feat.dist2.size, layout.size))
    A[:, layout.gamma] = feat.dist2
    A[:, layout.kappa] = -feat.H
    A[:, layout.psi] = -1.0
    return A, np.zeros(feat.dist2.size)


def _decay_rows(feat: SampleFeatures, layout: DecisionLayout, alpha: float, mu: float) -> Tuple[np.ndarray, np.ndarray]:
    m_inputs, gx, gd, z = feat.E.shape
    coeff = feat.E - alpha * feat.H[None, :, None, :]
    rows = m_inputs * gx * gd
    A = np.zeros((rows, layout.size))
    A[:, layout.varpi] = -1.0
    A[:, layout.kappa] = coeff.reshape(rows, z)
    A[:, layout.zvec] = -np.broadcast_to(feat.Q[None], (m_inputs, gx, gd, layout.nz)).reshape(rows, layout.nz)
    A[:, layout.psi] = -1.0
    return A, np.full(rows, -mu)


def _sample_rows(feat, layout, alpha, mu):
    A1, b1 = _storage_rows(feat, layout)
    A2, b2 = _decay_rows(feat, layout, alpha, mu)
    return np.vstack([A1, A2]), np.concatenate([b1, b2])


@dataclass
class AlphaOutcome:
    alpha: float
    status: str
    psi: Optional[float] = None
    varpi: Optional[float] = None
    y: Optional[np.ndarray] = None
    max_violation: Optional[float] = None
    duality_gap: Optional[float] = None
    cut_rounds: int = 0
    active_rows: int = 0

    def summary(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha, "status": self.status, "psi": self.psi, "varpi": self.varpi,
            "max_violation": self.max_violation, "duality_gap": self.duality_gap,
            "cut_rounds": self.cut_rounds, "active_rows": self.active_rows,
        }


@dataclass
class ScenarioSolution:
    kappa: np.ndarray
    gamma: float
    varpi: float
    Z: np.ndarray
    alpha_star: float
    psi_star: float
    N_used: int
    L_used: int
    n: int
    p: int
    template: Dict[str, Any]
    mu: float
    max_violation: float
    duality_gap: Optional[float] = None
    dataset_hash: str = ""
    seed: int = 0
    per_alpha: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def Z11(self) -> np.ndarray:
        return self.Z[:self.p, :self.p]

    @property
    def Z12(self) -> np.ndarray:
        return self.Z[:self.p, self.p:]

    @property
    def Z22(self) -> np.ndarray:
        return self.Z[self.p:, self.p:]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kappa": self.kappa.tolist(), "gamma": self.gamma, "varpi": self.varpi,
            "Z": self.Z.tolist(), "alpha_star": self.alpha_star, "psi_star": self.psi_star,
            "N_used": self.N_used, "L_used": self.L_used, "n": self.n, "p": self.p,
            "template": self.template, "mu": self.mu, "max_violation": self.max_violation,
            "duality_gap": self.duality_gap, "dataset_hash": self.dataset_hash,
            "seed": self.seed, "per_alpha": self.per_alpha,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioSolution":
        values = dict(data)
        values["kappa"] = np.asarray(values["kappa"], dtype=float)
        values["Z"] = np.asarray(values["Z"], dtype=float)
        return cls(**values)


@dataclass
class SopInfeasible:
    """No alpha grid point produced a feasible LP inside the boxes."""
    reason: str
    per_alpha: List[Dict[str, Any]] = field(default_factory=list)


class SopSolver:
    """Assembles rows from precomputed sample features and solves per alpha."""

    def __init__(self, template: SstfTemplate, cfg: SopConfig, data: ScenarioDataset, workers: int = 1):
        self.template = template
        self.cfg = cfg
        self.data = data
        self.workers = max(1, workers)
        self.layout = DecisionLayout(template.z, data.sys.n, data.sys.p)
        self.lower, self.upper = self.layout.bounds(cfg.boxes)
        self.objective = np.zeros(self.layout.size)
        self.objective[self.layout.psi] = 1.0
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            self.features = list(pool.map(lambda i: compute_features(template, data, self.layout, i), range(data.N)))
        f0 = self.features[0]
        self.rows_per_sample = f0.dist2.size + int(np.prod(f0.E.shape[:3]))
        metrics.scenario_constraint_rows_total.labels(kind="storage").inc(data.N * f0.dist2.size)
        metrics.scenario_constraint_rows_total.labels(kind="decay").inc(data.N * int(np.prod(f0.E.shape[:3])))

    @property
    def total_rows(self) -> int:
        return self.data.N * self.rows_per_sample

    def _lp(self, A: np.ndarray, b: np.ndarray) -> LinearProgram:
        return LinearProgram(self.objective, A, b, self.lower, self.upper)

    def violations(self, y: np.ndarray, alpha: float) -> List[np.ndarray]:
        """Per-sample row violations A y - b."""
        out = []
        for feat in self.features:
            A, b = _sample_rows(feat, self.layout, alpha, self.cfg.mu)
            out.append(A @ y - b)
        return out

    def _finish(self, alpha: float, res: LpResult, rounds: int, active: int) -> AlphaOutcome:
        if not res.is_optimal:
            return AlphaOutcome(alpha=alpha, status=res.status, cut_rounds=rounds, active_rows=active)
        worst = max(float(np.max(v)) for v in self.violations(res.x, alpha))
        return AlphaOutcome(
            alpha=alpha, status=res.status, psi=float(res.x[self.layout.psi]),
            varpi=float(res.x[self.layout.varpi]), y=res.x, max_violation=max(worst, 0.0),
            duality_gap=res.duality_gap, cut_rounds=rounds, active_rows=active,
        )

    def solve_alpha(self, alpha: float) -> AlphaOutcome:
        if self.total_rows <= self.cfg.row_budget:
            blocks = [_sample_rows(f, self.layout, alpha, self.cfg.mu) for f in self.features]
            A = stack_rows([blk[0] for blk in blocks], self.layout.size)
            b = np.concatenate([blk[1] for blk in blocks])
            return self._finish(alpha, solve_lp(self._lp(A, b)), 0, A.shape[0])
        return self._solve_by_cuts(alpha)

    def _solve_by_cuts(self, alpha: float) -> AlphaOutcome:
        layout, mu = self.layout, self.cfg.mu
        active: List[set] = []
        for i, feat in enumerate(self.features):
            gx = feat.dist2.size
            xi_cell = self.data.qx.index(self.data.x_bar[i])[0]
            di_cell = self.data.qd.index(self.data.d_bar[i])[0]
            m_inputs, _, gd, _ = feat.E.shape
            decay = [gx + (u * gx + int(xi_cell)) * gd + int(di_cell) for u in range(m_inputs)]
            active.append(set(range(gx)) | set(decay))

        cut_batch = max(1, self.cfg.row_budget // 4)
        tol = settings.lp_feasibility_tolerance
        for rounds in range(1, self.cfg.max_cut_rounds + 1):
            A_parts, b_parts = [], []
            for feat, rows in zip(self.features, active):
                A, b = _sample_rows(feat, layout, alpha, mu)
                idx = np.fromiter(sorted(rows), dtype=int)
                A_parts.append(A[idx])
                b_parts.append(b[idx])
            A = stack_rows(A_parts, layout.size)
            b = np.concatenate(b_parts)
            res = solve_lp(self._lp(A, b))
            if not res.is_optimal:
                return self._finish(alpha, res, rounds, A.shape[0])

            candidates = []
            for i, v in enumerate(self.violations(res.x, alpha)):
                hot = np.flatnonzero(v > tol)
                candidates.extend((float(v[r]), i, int(r)) for r in hot if int(r) not in active[i])
            if not candidates:
                logger.debug(f"alpha={alpha}: constraint generation converged after {rounds} rounds, {A.shape[0]} rows")
                return self._finish(alpha, res, rounds, A.shape[0])
            candidates.sort(reverse=True)
            for _, i, r in candidates[:cut_batch]:
                active[i].add(r)

        raise NumericError(
            f"constraint generation did not converge for alpha={alpha}",
            diagnostics={"alpha": alpha, "rounds": self.cfg.max_cut_rounds, "total_rows": self.total_rows},
            trace=[f"round limit {self.cfg.max_cut_rounds} reached"],
        )

    def solution_from(self, outcome: AlphaOutcome, outcomes: List[AlphaOutcome]) -> ScenarioSolution:
        y = outcome.y
        return ScenarioSolution(
            kappa=y[self.layout.kappa].copy(),
            gamma=float(y[self.layout.gamma]),
            varpi=float(y[self.layout.varpi]),
            Z=self.layout.unpack_z(y),
            alpha_star=outcome.alpha,
            psi_star=float(y[self.layout.psi]),
            N_used=self.data.N,
            L_used=self.data.L,
            n=self.data.sys.n,
            p=self.data.sys.p,
            template=self.template.describe(),
            mu=self.cfg.mu,
            max_violation=float(outcome.max_violation),
            duality_gap=outcome.duality_gap,
            dataset_hash=self.data.dataset_hash(),
            seed=self.data.seed,
            per_alpha=[o.summary() for o in outcomes],
        )


def select_outcome(outcomes: List[AlphaOutcome], certifiable_threshold: Optional[float] = None) -> Optional[AlphaOutcome]:
    """
    Pick the grid point to report.

    With a threshold, the smallest alpha whose psi is at most the threshold
    wins (ties by smallest varpi); otherwise, or if none qualifies, the
    smallest psi (ties by smallest alpha).
    """
    optimal = [o for o in outcomes if o.status == "optimal"]
    if not optimal:
        return None
    if certifiable_threshold is not None:
        certifiable = [o for o in optimal if o.psi <= certifiable_threshold]
        if certifiable:
            return min(certifiable, key=lambda o: (o.alpha, o.varpi))
    return min(optimal, key=lambda o: (o.psi, o.alpha))


def assemble_and_solve_sop(
    template: SstfTemplate,
    cfg: SopConfig,
    data: ScenarioDataset,
    certifiable_threshold: Optional[float] = None,
    workers: int = 1
) -> Union[ScenarioSolution, SopInfeasible]:
    """
    Solve the sampled program for every alpha grid point and select one.

    Args:
        template: Storage-function template (linear in kappa)
        cfg: Program configuration (alpha grid, mu, boxes)
        data: Scenario dataset drawn with the intended N and L
        certifiable_threshold: psi level below which a grid point certifies
        workers: Threads for the per-alpha solves

    Returns:
        ScenarioSolution, or SopInfeasible when every LP is infeasible

    Raises:
        NumericError: solver breakdown
    """
    if template.n != data.sys.n:
        raise ConfigurationError(f"template dimension {template.n} does not match the subsystem state dimension {data.sys.n}")
    solver = SopSolver(template, cfg, data, workers)
    logger.info(
        f"{data.sys.name}: SOP with {solver.layout.size} variables, {solver.total_rows} sampled rows "
        f"over alpha grid {cfg.alpha_grid}"
    )
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(pool.map(solver.solve_alpha, cfg.alpha_grid))
    for o in outcomes:
        logger.info(f"{data.sys.name}: alpha={o.alpha} status={o.status} psi={o.psi}")

    chosen = select_outcome(outcomes, certifiable_threshold)
    if chosen is None:
        return SopInfeasible(
            reason="every alpha grid point is infeasible within the variable boxes",
            per_alpha=[o.summary() for o in outcomes],
        )
    return solver.solution_from(chosen, outcomes)


def direct_constraint_values(
    template: SstfTemplate,
    data: ScenarioDataset,
    alpha: float,
    mu: float,
    y: np.ndarray
) -> np.ndarray:
    """
    Both constraint families minus psi, evaluated from S itself rather than
    from assembled rows.
    """
    layout = DecisionLayout(template.z, data.sys.n, data.sys.p)
    gamma, varpi, psi = y[layout.gamma], y[layout.varpi], y[layout.psi]
    kappa = y[layout.kappa]
    Z = layout.unpack_z(y)
    xs, ds = data.state_grid, data.disturbance_grid
    values = []
    for i in range(data.N):
        x_i, d_i = data.x_bar[i], data.d_bar[i]
        s_here = template.value(kappa, x_i[None, :], xs)
        values.append(gamma * np.sum((x_i - xs) ** 2, axis=1) - s_here - psi)
        w = np.concatenate([
            np.broadcast_to((d_i - ds)[None], (xs.shape[0],) + ds.shape),
            np.broadcast_to((x_i - xs)[:, None], (xs.shape[0], ds.shape[0], xs.shape[1])),
        ], axis=-1)
        supply = np.einsum("...a,ab,...b->...", w, Z, w)
        for u in range(data.sys.input_set.size):
            fh = data.abstract_successors(i, u)
            expected = template.value(kappa, data.successors[i, u][None, None], fh).mean(axis=2)
            decay = expected - alpha * s_here[:, None] - varpi + mu - supply
            values.append((decay - psi).ravel())
    return np.concatenate(values)


def verify_solution(solution: ScenarioSolution, template: SstfTemplate, data: ScenarioDataset) -> float:
    """Largest excess of any sampled constraint over psi*."""
    layout = DecisionLayout(template.z, solution.n, solution.p)
    y = np.zeros(layout.size)
    y[layout.gamma] = solution.gamma
    y[layout.varpi] = solution.varpi
    y[layout.kappa] = solution.kappa
    y[layout.zvec] = solution.Z[layout.tri_rows, layout.tri_cols]
    y[layout.psi] = solution.psi_star
    return float(np.max(direct_constraint_values(template, data, solution.alpha_star, solution.mu, y)))


def estimate_variance_bound(
    template: SstfTemplate,
    kappa: np.ndarray,
    data: ScenarioDataset,
    inflation: float = 1.5
) -> float:
    """
    Inflated maximum sample variance of S(kappa, f, fh) across realizations.

    Raises:
        InsufficientDataError: fewer than 2 realizations per pair
    """
    if data.L < 2:
        raise InsufficientDataError("variance estimation needs at least 2 realizations")
    worst = 0.0
    for i in range(data.N):
        for u in range(data.sys.input_set.size):
            fh = data.abstract_successors(i, u)
            s = template.value(kappa, data.successors[i, u][None, None], fh)
            worst = max(worst, float(np.max(np.var(s, axis=2, ddof=1))))
    bound = inflation * worst
    logger.info(f"{data.sys.name}: pilot variance bound C={bound:.4g} (max sample variance {worst:.4g})")
    return bound


def write_solution(solution: ScenarioSolution, path: Path, cfg: SopConfig, extra: Optional[Dict[str, Any]] = None) -> None:
    """JSON record with everything needed to reproduce the solve."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = {
        "solution": solution.to_dict(),
        "config": cfg.model_dump(mode="json"),
        "tolerances": {
            "lp_feasibility": settings.lp_feasibility_tolerance,
            "lp_optimality": settings.lp_optimality_tolerance,
        },
    }
    if extra:
        record.update(extra)
    path.write_text(json.dumps(record, indent=2, sort_keys=True))
