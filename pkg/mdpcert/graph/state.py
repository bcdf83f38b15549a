"""
LangGraph state definition using TypedDict for dict-based state management.
"""
from typing import Any, Dict, List, Optional
from typing_extensions import TypedDict


class SubsystemGroup(TypedDict):
    """Subsystems sharing one fingerprint (and therefore one set of artifacts)."""
    key: str
    members: List[int]
    seed: int


class StageFailure(TypedDict):
    stage: str
    exit_code: int
    reason: str
    details: Dict[str, Any]


class PipelineState(TypedDict, total=False):
    """
    State passed between pipeline stages.

    Every stage returns a partial update; a stage that cannot continue sets
    `failure` and the graph routes straight to the report stage.
    """

    # Setup
    network: Any                       # InterconnectionSpec
    network_kind: str
    groups: List[SubsystemGroup]
    templates: Dict[str, Any]          # group key -> SstfTemplate
    scenario_grids: Dict[str, Any]     # group key -> (qx, qd)
    abstraction_grids: Dict[str, Any]  # group key -> (qx, qd)
    resumed: bool

    # Sample size
    sample_plan: Dict[str, Dict[str, Any]]  # group key -> {c, N, L, variance_bound}

    # Scenario program
    solutions: Dict[str, Any]          # group key -> ScenarioSolution
    solution_checks: Dict[str, float]

    # Certification and composition
    certificates: List[Any]            # StorageCertificate per subsystem
    composition: Any                   # BisimulationCertificate
    rejection: Any                     # CompositionRejected

    # Closeness
    v0: float
    delta_rows: List[Dict[str, Any]]

    # Abstraction and synthesis
    mdps: Dict[str, Any]               # group key -> FiniteMdp
    policies: Dict[str, Any]           # group key -> Policy
    self_rollouts: Dict[str, Dict[str, Any]]

    # Validation
    validation: Any                    # ValidationResult
    rollout: Any                       # RolloutResult

    # Outcome
    failure: Optional[StageFailure]
    comparisons: List[Dict[str, Any]]
    exit_code: int
    bundle: Dict[str, Any]

    # Metadata for observability
    nodes_executed: List[str]
    timings: Dict[str, float]
    cache_hits: Dict[str, int]
