"""
Figures reported for the 100-room case study and comparison logging.

Recomputed values that disagree with a reported figure are logged at WARNING
as a noted discrepancy; agreeing values at INFO.
"""
import logging
from typing import Dict, Optional

logger = logging.getLogger(__name__)

ROOM_CASE_STUDY = {
    "sample_count": 911,
    "realizations": 643,
    "eta_inverse": 0.362,
    "lipschitz": 0.8,
    "psi_star": -0.3019,
    "margin": -0.011,
    "gamma_composed": 14100.0,
    "varpi_composed": 42.0,
    "alpha_composed": 0.99,
    "confidence_composed": 0.98,
    "closeness_probability": 0.95,
}


def compare_with_reported(
    name: str,
    value: float,
    rel_tol: float = 1e-3,
    abs_tol: float = 1e-9,
    note: str = "",
    reported: Optional[Dict[str, float]] = None
) -> Dict[str, object]:
    """
    Log and return a comparison record for one reported figure.

    Returns:
        {"name", "computed", "reported", "matches", "note"}
    """
    table = ROOM_CASE_STUDY if reported is None else reported
    expected = table[name]
    matches = abs(value - expected) <= max(abs_tol, rel_tol * abs(expected))
    record = {"name": name, "computed": value, "reported": expected, "matches": matches, "note": note}
    if matches:
        logger.info(f"{name}: computed {value:.6g} matches reported {expected:.6g}")
    else:
        logger.warning(f"{name}: computed {value:.6g} vs reported {expected:.6g} (noted discrepancy){' - ' + note if note else ''}")
    return record
