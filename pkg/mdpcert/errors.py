"""
Exception hierarchy and pipeline exit codes.

Certification outcomes that simply say "no" (infeasible SOP, positive margin,
failed composition LMI) are returned as values, not raised.
"""
from enum import IntEnum
from typing import Any, Dict, List, Optional


class CertificationToolError(Exception):
    """Base class for every error raised by the toolkit."""


class PreconditionError(CertificationToolError, ValueError):
    """An argument violates an operation's precondition."""


class ConfigurationError(CertificationToolError, ValueError):
    """Inconsistent configuration (dimensions, files, schema)."""


class ParameterError(CertificationToolError, ValueError):
    """Model parameters violate a modelling invariant."""


class InsufficientDataError(CertificationToolError, ValueError):
    """Not enough samples to compute the requested estimate."""


class EstimationError(CertificationToolError, RuntimeError):
    """A statistical estimate could not be formed."""


class UnboundedSampleSizeError(CertificationToolError, ValueError):
    """No finite scenario sample size meets the requested confidence."""


class ProvenanceError(CertificationToolError, ValueError):
    """A solution was produced with sample counts inconsistent with its claims."""


class SpecificationError(CertificationToolError, ValueError):
    """A safety specification cannot be evaluated on the abstraction."""


class UnsupportedHorizonError(CertificationToolError, ValueError):
    """Infinite-horizon closeness requested where only finite horizons hold."""


class LipschitzInputError(CertificationToolError, ValueError):
    """Invalid inputs for the Lipschitz constant formulas."""


class NumericError(CertificationToolError, RuntimeError):
    """A numerical routine broke down; carries diagnostics for the report."""

    def __init__(
        self,
        message: str,
        diagnostics: Optional[Dict[str, Any]] = None,
        trace: Optional[List[str]] = None
    ):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
        self.trace = trace or []


class ExitCode(IntEnum):
    """Process exit codes of the pipeline command."""
    OK = 0
    TOOL_ERROR = 1
    CONFIG_ERROR = 2
    INSUFFICIENT_DATA = 3
    SOP_INFEASIBLE = 4
    NOT_CERTIFIED = 5
    COMPOSITION_REJECTED = 6
    NUMERIC_ERROR = 7
