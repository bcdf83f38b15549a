"""
Prometheus metrics registry and helpers.
Defines all metrics used throughout the pipeline.
"""
from pathlib import Path
from prometheus_client import Counter, Histogram, REGISTRY, write_to_textfile
import logging

logger = logging.getLogger(__name__)

# Define bucket ranges for latency histograms
LATENCY_BUCKETS = [0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 60.0, 300.0, 1800.0]

# ============================================================================
# PIPELINE METRICS
# ============================================================================

stage_latency_seconds = Histogram(
    'mdpcert_stage_latency_seconds',
    'Pipeline stage latency in seconds',
    ['stage'],
    buckets=LATENCY_BUCKETS
)

stage_failure_total = Counter(
    'mdpcert_stage_failure_total',
    'Pipeline stages that halted the run',
    ['stage', 'reason']
)

pipeline_runs_total = Counter(
    'mdpcert_pipeline_runs_total',
    'Completed pipeline runs by exit code',
    ['exit_code']
)

# ============================================================================
# SCENARIO / LP METRICS
# ============================================================================

lp_solve_total = Counter(
    'mdpcert_lp_solve_total',
    'Linear programs solved, by status',
    ['status']
)

lp_solve_latency_seconds = Histogram(
    'mdpcert_lp_solve_latency_seconds',
    'Linear program solve latency in seconds',
    buckets=LATENCY_BUCKETS
)

scenario_constraint_rows_total = Counter(
    'mdpcert_scenario_constraint_rows_total',
    'Sampled SOP constraint rows assembled',
    ['kind']
)

certification_outcome_total = Counter(
    'mdpcert_certification_outcome_total',
    'Storage-function certification outcomes',
    ['outcome']
)

# ============================================================================
# ABSTRACTION / SIMULATION METRICS
# ============================================================================

kernel_rows_total = Counter(
    'mdpcert_kernel_rows_total',
    'Finite-MDP kernel rows estimated',
    ['mode']
)

rollout_trials_total = Counter(
    'mdpcert_rollout_trials_total',
    'Monte Carlo trials simulated',
    ['harness']
)

# ============================================================================
# CACHE METRICS
# ============================================================================

cache_hit_total = Counter(
    'mdpcert_cache_hit_total',
    'Total cache hits',
    ['cache', 'stage']
)

cache_miss_total = Counter(
    'mdpcert_cache_miss_total',
    'Total cache misses',
    ['cache', 'stage']
)


# ============================================================================
# HELPER FUNCTIONS
# ============================================================================

def record_lp_solve(status: str, latency: float):
    """
    Record one LP solve.

    Args:
        status: Solver status label (optimal/infeasible/unbounded/error)
        latency: Solve latency in seconds
    """
    lp_solve_total.labels(status=status).inc()
    lp_solve_latency_seconds.observe(latency)


def record_cache_lookup(cache_name: str, stage: str, hit: bool):
    """
    Record cache lookup metrics.

    Args:
        cache_name: Cache identifier
        stage: Pipeline stage name
        hit: Whether cache hit occurred
    """
    if hit:
        cache_hit_total.labels(cache=cache_name, stage=stage).inc()
    else:
        cache_miss_total.labels(cache=cache_name, stage=stage).inc()


def write_snapshot(path: Path) -> None:
    """Write the current registry in Prometheus text format."""
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), REGISTRY)
    logger.debug(f"Metrics snapshot written to {path}")
