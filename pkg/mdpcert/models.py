"""
Pipeline configuration schema, validated from a JSON file.
"""
import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError

from mdpcert.certification.lipschitz import LipschitzInputs
from mdpcert.config import settings
from mdpcert.errors import ConfigurationError
from mdpcert.scenario.sop import SopConfig
from mdpcert.synthesis.safety import SafetySpec
from mdpcert.systems.interfaces import BlackBoxSystem, BoxSet
from mdpcert.systems.loader import NetworkConfig


class TemplateConfig(BaseModel):
    kind: Literal["polynomial", "quadratic"] = "polynomial"
    powers: List[int] = Field(default_factory=lambda: [4, 2])
    constant: bool = True


class GridConfig(BaseModel):
    """Cell widths; a single value is used for every dimension."""
    state_widths: List[float] = Field(default_factory=lambda: [0.1])
    disturbance_widths: List[float] = Field(default_factory=lambda: [0.1])
    scenario_state_widths: Optional[List[float]] = None
    scenario_disturbance_widths: Optional[List[float]] = None


class LipschitzConfig(BaseModel):
    """
    How the Lipschitz constants are obtained.

    "values": given directly per alpha (or one value)
    "inputs": evaluated from user-supplied norm bounds
    "probe":  bounds estimated from a probe batch (non-rigorous); P from the
              template when it is a quadratic form, else from `P`. Linear
              subsystems use their exact matrix norms instead of probing
    """
    mode: Literal["values", "inputs", "probe"] = "probe"
    values: List[float] = Field(default_factory=list)
    inputs: Optional[LipschitzInputs] = None
    P: Optional[List[List[float]]] = None
    probe_count: int = Field(1000, ge=1)


class KernelConfig(BaseModel):
    mode: Literal["empirical", "gaussian-mle"] = "empirical"
    samples_per_cell: int = Field(1000, ge=1)


class SafetyConfig(BaseModel):
    horizon: int = Field(5, ge=1)
    safe_bounds: Optional[List[List[float]]] = Field(
        None, description="[[lo...], [hi...]] applied to every subsystem; defaults to its state set"
    )

    def spec_for(self, sub: BlackBoxSystem) -> SafetySpec:
        box = sub.state_set if self.safe_bounds is None else BoxSet(*self.safe_bounds)
        return SafetySpec(safe_set=box, horizon=self.horizon)


class ClosenessConfig(BaseModel):
    epsilons: List[float] = Field(default_factory=lambda: [0.5])
    horizons: List[Union[int, Literal["inf"]]] = Field(default_factory=lambda: [5])
    validation_epsilon: float = Field(0.5, gt=0)
    validation_horizon: int = Field(5, ge=1)
    validation_trials: int = Field(10_000, ge=0)


class RolloutConfig(BaseModel):
    trials: int = Field(10_000, ge=0)
    record: int = Field(10, ge=0)
    self_rollout_trials: int = Field(10_000, ge=0)


class PipelineConfig(BaseModel):
    name: str = "run"
    network: Optional[NetworkConfig] = None
    network_file: Optional[str] = None
    sop: SopConfig = Field(default_factory=SopConfig)
    sop_per_subsystem: Dict[str, SopConfig] = Field(default_factory=dict)
    template: TemplateConfig = Field(default_factory=TemplateConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    lipschitz: LipschitzConfig = Field(default_factory=LipschitzConfig)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    safety: SafetyConfig = Field(default_factory=SafetyConfig)
    closeness: ClosenessConfig = Field(default_factory=ClosenessConfig)
    rollout: RolloutConfig = Field(default_factory=RolloutConfig)
    confidence_level: float = Field(0.95, gt=0, lt=1)
    reuse_identical_subsystems: bool = True
    seed: int = Field(default_factory=lambda: settings.default_seed)
    output_dir: Optional[str] = None

    def sop_for(self, index: int) -> SopConfig:
        return self.sop_per_subsystem.get(str(index), self.sop)

    def resolve_network(self, base_dir: Path) -> NetworkConfig:
        if self.network is not None:
            return self.network
        if self.network_file is None:
            return NetworkConfig()
        path = Path(base_dir) / self.network_file
        if not path.exists():
            raise ConfigurationError(f"network file {path} does not exist")
        try:
            return NetworkConfig.model_validate_json(path.read_text())
        except ValidationError as exc:
            raise ConfigurationError(f"invalid network file {path}: {exc}") from exc


def load_pipeline_config(path: Path) -> PipelineConfig:
    """
    Read and validate a pipeline configuration.

    Raises:
        ConfigurationError: missing file, malformed JSON or schema violation
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file {path} does not exist")
    try:
        return PipelineConfig.model_validate(json.loads(path.read_text()))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise ConfigurationError(f"invalid pipeline config {path}: {exc}") from exc
