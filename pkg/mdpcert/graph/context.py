"""
Run-scoped dependencies shared by the pipeline stages.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from mdpcert.cache.memory_cache import MemoryCache
from mdpcert.models import PipelineConfig


@dataclass
class RunContext:
    """
    Everything a stage needs besides the graph state.

    Attributes:
        cfg: Validated pipeline configuration (seed and output dir already resolved)
        base_dir: Directory relative paths in the configuration are resolved against
        run_dir: Directory receiving the report bundle
        workers: Thread count for intra-stage parallelism
        cache: Artifact cache shared across stages
        resume_dir: Previous run directory whose certificates are reloaded
    """
    cfg: PipelineConfig
    base_dir: Path
    run_dir: Path
    workers: int = 1
    cache: MemoryCache = field(default_factory=MemoryCache)
    resume_dir: Optional[Path] = None

    @property
    def seed(self) -> int:
        return self.cfg.seed
