"""
Probabilistic closeness bound between the network and its abstraction.

With g = gamma * eps^2:

    case1 (g >= varpi / (1 - alpha)):  1 - (1 - v0/g) (1 - varpi/g)^T
    case2 (otherwise):                  (v0/g) alpha^T + varpi / ((1 - alpha) g) (1 - alpha^T)
    infinite horizon (varpi = 0 only):  v0 / g
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from scipy.stats import beta as beta_dist

from mdpcert.errors import ParameterError, PreconditionError, UnsupportedHorizonError

BRANCH_CASE1 = "case1"
BRANCH_CASE2 = "case2"
BRANCH_INFINITE = "infinite"


@dataclass(frozen=True)
class ClosenessQuery:
    epsilon: float
    horizon: Optional[int]   # None means infinite
    v0: float
    gamma: float
    alpha: float
    varpi: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be > 0")
        if not 0 < self.alpha < 1:
            raise ParameterError("alpha must lie in (0, 1)")
        if not self.gamma > 0:
            raise ParameterError("gamma must be > 0")
        if self.varpi < 0 or self.v0 < 0:
            raise ParameterError("varpi and v0 must be >= 0")
        if self.horizon is not None and self.horizon < 0:
            raise ParameterError("horizon must be >= 0")


@dataclass(frozen=True)
class ClosenessBound:
    delta: float
    raw: float
    branch: str
    case1: Optional[float] = None
    case2: Optional[float] = None

    def as_row(self) -> Dict[str, object]:
        return {"delta": self.delta, "raw": self.raw, "branch": self.branch,
                "case1": self.case1, "case2": self.case2}


def delta_bound(q: ClosenessQuery) -> ClosenessBound:
    """
    Evaluate the bound; both finite-horizon formulas are always reported.

    Raises:
        UnsupportedHorizonError: infinite horizon with varpi > 0
    """
    g = q.gamma * q.epsilon ** 2
    if q.horizon is None:
        if q.varpi > 0:
            raise UnsupportedHorizonError("the infinite-horizon bound requires varpi = 0")
        raw = q.v0 / g
        return ClosenessBound(delta=min(max(raw, 0.0), 1.0), raw=raw, branch=BRANCH_INFINITE)

    T = q.horizon
    case1 = 1.0 - (1.0 - q.v0 / g) * (1.0 - q.varpi / g) ** T
    case2 = (q.v0 / g) * q.alpha ** T + q.varpi / ((1.0 - q.alpha) * g) * (1.0 - q.alpha ** T)
    if g >= q.varpi / (1.0 - q.alpha):
        raw, branch = case1, BRANCH_CASE1
    else:
        raw, branch = case2, BRANCH_CASE2
    return ClosenessBound(delta=min(max(raw, 0.0), 1.0), raw=raw, branch=branch, case1=case1, case2=case2)


def delta_table(
    gamma: float,
    alpha: float,
    varpi: float,
    v0: float,
    epsilons: Sequence[float],
    horizons: Sequence[Optional[int]]
) -> List[Dict[str, object]]:
    """Rows of (epsilon, horizon, delta, raw, branch) over a grid; unsupported cells are skipped."""
    rows = []
    for eps in epsilons:
        for T in horizons:
            query = ClosenessQuery(epsilon=eps, horizon=T, v0=v0, gamma=gamma, alpha=alpha, varpi=varpi)
            try:
                bound = delta_bound(query)
            except UnsupportedHorizonError:
                continue
            rows.append({"epsilon": eps, "horizon": "inf" if T is None else T, **bound.as_row()})
    return rows


def clopper_pearson(k: int, n: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Exact binomial confidence interval for k successes in n trials."""
    if n < 1 or not 0 <= k <= n:
        raise PreconditionError(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    if not 0 < confidence < 1:
        raise PreconditionError("confidence must lie in (0, 1)")
    tail = (1.0 - confidence) / 2.0
    lower = 0.0 if k == 0 else float(beta_dist.ppf(tail, k, n - k + 1))
    upper = 1.0 if k == n else float(beta_dist.ppf(1.0 - tail, k + 1, n - k))
    return lower, upper


def half_width(interval: Tuple[float, float]) -> float:
    return 0.5 * (interval[1] - interval[0])
