"""
Result records of the harness: per-run time series, crossing-time tables over a bond-dimension
grid, and growth-law fit reports.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from core.errors import PreconditionError


class StepRow(NamedTuple):
    t: float
    eta_tot: float
    max_bond: int
    wall_ms: float


@dataclass
class TimeSeries:
    """
    Accumulated truncation error of one run, one row per Trotter step (t = 0 included).

    Attributes:
        t (np.ndarray): Times k * dt.
        eta_tot (np.ndarray): Cumulative truncation error, nondecreasing.
        max_bond (np.ndarray): Largest bond dimension after each step.
        wall_ms (np.ndarray): Wall time per step in milliseconds.
        config (Dict[str, Any]): Echo of the run configuration.
        stopped_early (bool): Whether the run ended at the early-stop threshold.
        preparation (Dict[str, Any]): Notes from building the initial operator.
    """
    t: np.ndarray
    eta_tot: np.ndarray
    max_bond: np.ndarray
    wall_ms: np.ndarray
    config: Dict[str, Any] = field(default_factory=dict)
    stopped_early: bool = False
    preparation: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: Sequence[StepRow], config: Optional[Dict[str, Any]] = None, **kwargs) -> "TimeSeries":
        return cls(
            t=np.array([r.t for r in rows], dtype=float),
            eta_tot=np.array([r.eta_tot for r in rows], dtype=float),
            max_bond=np.array([r.max_bond for r in rows], dtype=int),
            wall_ms=np.array([r.wall_ms for r in rows], dtype=float),
            config=dict(config or {}),
            **kwargs,
        )

    def rows(self) -> List[StepRow]:
        return [StepRow(float(t), float(e), int(d), float(w))
                for t, e, d, w in zip(self.t, self.eta_tot, self.max_bond, self.wall_ms)]

    def __len__(self):
        return len(self.t)

    @property
    def final_eta(self) -> float:
        return float(self.eta_tot[-1]) if len(self.eta_tot) else 0.0


class DepsRow(NamedTuple):
    """
    One grid point of a crossing-time table.

    Attributes:
        d (int): Bond dimension cap.
        t_star (Optional[float]): First time eta_tot exceeded eps; None if never reached.
        error (Optional[str]): Failure message if the run did not finish.
    """
    d: int
    t_star: Optional[float]
    error: Optional[str] = None


@dataclass
class DepsTable:
    """
    Crossing times t*(D) over an ascending grid of bond dimensions.

    Attributes:
        rows (List[DepsRow]): One row per grid point, in grid order.
        eps (float): The tolerance the crossings refer to.
        config (Dict[str, Any]): Echo of the base run configuration.
        series (Dict[int, TimeSeries]): Per-D time series of the runs that finished.
    """
    rows: List[DepsRow]
    eps: float
    config: Dict[str, Any] = field(default_factory=dict)
    series: Dict[int, TimeSeries] = field(default_factory=dict, repr=False)

    def points(self) -> List[Tuple[float, int]]:
        """(t*, D) pairs of the rows whose run crossed eps."""
        return [(r.t_star, r.d) for r in self.rows if r.error is None and r.t_star is not None]

    def inversions(self) -> List[Tuple[int, int]]:
        """
        Adjacent grid pairs (D, D') with D < D' whose crossing times decrease.

        A run that never crossed counts as crossing at infinity; failed runs are skipped.
        """
        ok = [r for r in self.rows if r.error is None]
        found = []
        for a, b in zip(ok, ok[1:]):
            ta = np.inf if a.t_star is None else a.t_star
            tb = np.inf if b.t_star is None else b.t_star
            if tb < ta:
                found.append((a.d, b.d))
        return found

    def saturation_level(self) -> Optional[int]:
        """Smallest grid D whose run never crossed eps, if any."""
        never = [r.d for r in self.rows if r.error is None and r.t_star is None]
        return min(never) if never else None

    def failures(self) -> List[DepsRow]:
        return [r for r in self.rows if r.error is not None]


def deps_at(table: DepsTable, t: float) -> Optional[int]:
    """
    Reads D_eps(t) off a table: the smallest grid D whose run stays below eps up to time t.

    Returns:
        Optional[int]: None if every grid D has crossed by time t.
    """
    for row in sorted(table.rows, key=lambda r: r.d):
        if row.error is None and (row.t_star is None or row.t_star > t):
            return row.d
    return None


@dataclass
class FitReport:
    """
    Growth-law comparison for D_eps(t).

    Attributes:
        preferred (str): One of "linear", "quadratic", "exponential", "saturating".
        parameters (Dict[str, Dict[str, float]]): Fitted parameters per model.
        residuals (Dict[str, float]): Sum of squared log-D residuals per model.
        points (int): Number of (t*, D) points fitted.
        h_q (Optional[float]): Exponential rate.
        h_q_stderr (Optional[float]): Standard error of h_q.
        saturation_level (Optional[int]): Smallest D that never crossed.
    """
    preferred: str
    parameters: Dict[str, Dict[str, float]]
    residuals: Dict[str, float]
    points: int
    h_q: Optional[float] = None
    h_q_stderr: Optional[float] = None
    saturation_level: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "preferred": self.preferred,
            "parameters": self.parameters,
            "residuals": self.residuals,
            "points": self.points,
            "h_q": self.h_q,
            "h_q_stderr": self.h_q_stderr,
            "saturation_level": self.saturation_level,
        }


def require_points(points: Sequence[Tuple[float, int]], minimum: int) -> Tuple[np.ndarray, np.ndarray]:
    if len(points) < minimum:
        raise PreconditionError(f"Need at least {minimum} crossing points, got {len(points)}")
    t = np.array([p[0] for p in points], dtype=float)
    d = np.array([p[1] for p in points], dtype=float)
    return t, d
