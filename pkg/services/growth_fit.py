"""
Growth-law model selection for D_eps(t), fitted to the (t*, D) points of a crossing-time table.

Every model is fitted by least squares in its natural domain and scored by the sum of squared
residuals of log D, so models with different error structure are compared on one scale.
"""
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from core.errors import PreconditionError
from logger_config import get_logger
from services.records import DepsTable, FitReport, require_points

logger = get_logger("GrowthFit")

MIN_FIT_POINTS = 5
# free parameters per model; MODELS runs from the fewest, so residual ties go to the simpler law
MODEL_PARAMETERS = {"saturating": 1, "linear": 2, "quadratic": 2, "exponential": 2}
MODELS = tuple(sorted(MODEL_PARAMETERS, key=MODEL_PARAMETERS.get))


def _log_residual(d: np.ndarray, predicted: np.ndarray) -> float:
    # non-positive predictions cannot describe a bond dimension
    safe = np.maximum(predicted, np.finfo(float).tiny)
    return float(np.sum((np.log(d) - np.log(safe)) ** 2))


def plateau_level(t: np.ndarray, d: np.ndarray) -> float:
    """Mean D over the later half of the points, ordered by crossing time."""
    tail = d[np.argsort(t, kind="stable")][len(d) // 2:]
    return float(np.mean(tail))


def fit_growth(table: Union[DepsTable, Sequence[Tuple[float, int]]]) -> FitReport:
    """
    Fits D = a + b t, D = a + b t^2, log D = log A + h_q t and a constant level to the points.

    Args:
        table: A DepsTable, or (t*, D) pairs directly.

    Returns:
        FitReport: Parameters and log-D residuals of every model; the preferred model is the one
        with the smallest residual. Ties go to the earlier entry of MODELS, the model
        with fewer parameters.

    Raises:
        PreconditionError: With fewer than 5 points, unless the table saturates, or when all
            crossing times coincide.
    """
    points = table.points() if isinstance(table, DepsTable) else list(table)
    saturation = table.saturation_level() if isinstance(table, DepsTable) else None

    if len(points) < MIN_FIT_POINTS and saturation is not None:
        level = float(saturation)
        logger.info(f"Only {len(points)} crossings before saturation at D={saturation}")
        return FitReport("saturating", {"saturating": {"level": level}}, {"saturating": 0.0},
                         len(points), saturation_level=saturation)

    t, d = require_points(points, MIN_FIT_POINTS)
    if np.any(d <= 0):
        raise PreconditionError("Bond dimensions must be positive")
    if np.ptp(d) == 0:
        return FitReport("saturating", {"saturating": {"level": float(d[0])}}, {"saturating": 0.0},
                         len(points), saturation_level=saturation if saturation is not None else int(d[0]))
    if np.ptp(t) == 0:
        raise PreconditionError("All crossing times coincide; no growth law can be fitted")

    parameters: Dict[str, Dict[str, float]] = {}
    residuals: Dict[str, float] = {}

    level = plateau_level(t, d)
    parameters["saturating"] = {"level": level}
    residuals["saturating"] = _log_residual(d, np.full_like(d, level))

    linear = stats.linregress(t, d)
    parameters["linear"] = {"intercept": float(linear.intercept), "slope": float(linear.slope)}
    residuals["linear"] = _log_residual(d, linear.intercept + linear.slope * t)

    quadratic = stats.linregress(t ** 2, d)
    parameters["quadratic"] = {"intercept": float(quadratic.intercept), "curvature": float(quadratic.slope)}
    residuals["quadratic"] = _log_residual(d, quadratic.intercept + quadratic.slope * t ** 2)

    exponential = stats.linregress(t, np.log(d))
    h_q = float(exponential.slope)
    h_q_stderr = float(exponential.stderr)
    parameters["exponential"] = {"prefactor": float(np.exp(exponential.intercept)), "h_q": h_q, "h_q_stderr": h_q_stderr}
    residuals["exponential"] = _log_residual(d, np.exp(exponential.intercept + h_q * t))

    preferred = min(MODELS, key=lambda m: residuals[m])
    logger.info(f"Growth fit on {len(points)} points: {preferred} preferred; h_q={h_q:.3f} +/- {h_q_stderr:.3f}; "
                f"residuals " + ", ".join(f"{m}={residuals[m]:.3e}" for m in MODELS))
    return FitReport(preferred, parameters, residuals, len(points), h_q, h_q_stderr, saturation)


def growth_rate(report: FitReport) -> Optional[float]:
    """h_q when the exponential model is preferred, else None."""
    return report.h_q if report.preferred == "exponential" else None
