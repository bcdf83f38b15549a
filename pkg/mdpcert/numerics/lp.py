"""
Bounded linear programs: min c^T y  s.t.  A y <= b,  lo <= y <= hi.

Solved with the HiGHS dual simplex through scipy. Every optimum is
re-checked against its constraints and the duality gap is computed from the
solver marginals.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from mdpcert.config import settings
from mdpcert.errors import NumericError, PreconditionError
from mdpcert.observability import metrics
from mdpcert.utils.timing import timer

logger = logging.getLogger(__name__)

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"

_SCIPY_STATUS = {0: STATUS_OPTIMAL, 2: STATUS_INFEASIBLE, 3: STATUS_UNBOUNDED}


@dataclass
class LinearProgram:
    """Objective, inequality rows and finite variable boxes."""
    objective: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    names: Optional[List[str]] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.size
        if n == 0:
            raise PreconditionError("a linear program needs at least one variable")
        self.A_ub = np.asarray(self.A_ub, dtype=float).reshape(-1, n)
        self.b_ub = np.asarray(self.b_ub, dtype=float).ravel()
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if self.A_ub.shape[0] != self.b_ub.size:
            raise PreconditionError(f"{self.A_ub.shape[0]} constraint rows but {self.b_ub.size} right-hand sides")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise PreconditionError("variable boxes must be finite")
        if np.any(self.lower > self.upper):
            raise PreconditionError("variable box with lower > upper")

    @property
    def num_variables(self) -> int:
        return int(self.objective.size)

    @property
    def num_constraints(self) -> int:
        return int(self.b_ub.size)

    def violation(self, y: np.ndarray) -> float:
        """Largest constraint or box violation at y (0 when feasible)."""
        worst = 0.0
        if self.num_constraints:
            worst = max(worst, float(np.max(self.A_ub @ y - self.b_ub)))
        worst = max(worst, float(np.max(self.lower - y)), float(np.max(y - self.upper)))
        return worst


@dataclass
class LpResult:
    status: str
    x: Optional[np.ndarray] = None
    value: Optional[float] = None
    max_violation: Optional[float] = None
    duality_gap: Optional[float] = None
    iterations: int = 0
    message: str = ""
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL


def _duality_gap(lp: LinearProgram, res) -> Optional[float]:
    try:
        dual = float(lp.lower @ res.lower.marginals + lp.upper @ res.upper.marginals)
        if lp.num_constraints:
            dual += float(lp.b_ub @ res.ineqlin.marginals)
    except (AttributeError, TypeError):
        return None
    return abs(float(res.fun) - dual)


def solve_lp(
    lp: LinearProgram,
    feasibility_tol: Optional[float] = None,
    optimality_tol: Optional[float] = None
) -> LpResult:
    """
    Solve a bounded LP.

    Args:
        lp: Problem
        feasibility_tol: Primal feasibility tolerance (defaults to config)
        optimality_tol: Dual feasibility tolerance (defaults to config)

    Returns:
        LpResult with status optimal, infeasible or unbounded

    Raises:
        NumericError: Iteration limit or numerical breakdown in the solver
    """
    feasibility_tol = feasibility_tol or settings.lp_feasibility_tolerance
    optimality_tol = optimality_tol or settings.lp_optimality_tolerance
    options = {
        "primal_feasibility_tolerance": feasibility_tol,
        "dual_feasibility_tolerance": optimality_tol,
        "presolve": True,
    }

    with timer() as elapsed:
        res = linprog(
            lp.objective,
            A_ub=lp.A_ub if lp.num_constraints else None,
            b_ub=lp.b_ub if lp.num_constraints else None,
            bounds=np.column_stack([lp.lower, lp.upper]),
            method="highs-ds",
            options=options,
        )
    iterations = int(getattr(res, "nit", 0) or 0)
    status = _SCIPY_STATUS.get(res.status)

    if status is None:
        metrics.record_lp_solve("error", elapsed["elapsed"])
        raise NumericError(
            f"LP solver failed: {res.message}",
            diagnostics={
                "scipy_status": int(res.status),
                "variables": lp.num_variables,
                "constraints": lp.num_constraints,
                "iterations": iterations,
            },
            trace=[f"highs-ds status {res.status}: {res.message}", f"iterations {iterations}"],
        )

    metrics.record_lp_solve(status, elapsed["elapsed"])
    if status != STATUS_OPTIMAL:
        logger.info(f"LP {status} ({lp.num_variables} vars, {lp.num_constraints} rows): {res.message}")
        return LpResult(status=status, iterations=iterations, message=str(res.message))

    x = np.asarray(res.x, dtype=float)
    result = LpResult(
        status=status,
        x=x,
        value=float(res.fun),
        max_violation=lp.violation(x),
        duality_gap=_duality_gap(lp, res),
        iterations=iterations,
        message=str(res.message),
    )
    logger.debug(
        f"LP optimal value={result.value:.6g} violation={result.max_violation:.2e} "
        f"gap={result.duality_gap} in {elapsed['elapsed']:.3f}s"
    )
    return result


def stack_rows(blocks: Sequence[np.ndarray], width: int) -> np.ndarray:
    """Vertically stack row blocks, tolerating an empty list."""
    blocks = [b for b in blocks if b.size]
    if not blocks:
        return np.zeros((0, width))
    return np.vstack(blocks)
