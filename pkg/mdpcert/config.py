"""
Configuration module for the certification toolkit.
Loads runtime settings from environment variables with sensible defaults.
"""
from pydantic_settings import BaseSettings
from typing import Optional


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables (prefix MDPCERT_)."""

    # Execution
    workers: int = 1
    default_seed: int = 2024
    output_dir: str = "runs"

    # Numerics
    lp_feasibility_tolerance: float = 1e-9
    lp_optimality_tolerance: float = 1e-9
    psd_tolerance: float = 1e-9
    symmetry_tolerance: float = 1e-10

    # Cache
    cache_max_size: int = 1000

    # Observability
    metrics_filename: str = "metrics.prom"

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    class Config:
        env_file = ".env"
        env_prefix = "MDPCERT_"
        case_sensitive = False


# Global settings instance
settings = Settings()
