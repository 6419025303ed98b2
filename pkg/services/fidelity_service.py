import asyncio
from dataclasses import dataclass, replace
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from core.errors import PreconditionError
from core.exact_oracle import ExactEvolver, TrotterCircuit, fidelity
from core.mpo import mpo_to_dense
from core.spin_model import dense_hamiltonian
from logger_config import get_logger
from services.evolution_service import EvolutionService
from services.records import StepRow
from services.run_context import RunConfig
from services.sweep_service import SweepService, check_grid

logger = get_logger("Fidelity")

MAX_BENCHMARK_SITES = 10
FIT_WINDOW = (1e-6, 1e-1)
MIN_FIT_POINTS = 3
REFERENCES = ("exact", "trotter")


class FidelityRow(NamedTuple):
    d: int
    t: float
    eta_tot: float
    infidelity: float


@dataclass(frozen=True)
class FidelityJob:
    config: RunConfig
    reference: str
    sample_every: int


@dataclass
class FidelityReport:
    """
    Infidelity of truncated MPO runs against a dense reference, and the fitted constant c in
    1 - F = c * eta_tot / dt.

    Attributes:
        rows (List[FidelityRow]): Samples of every run, ordered by D then t.
        c_per_d (Dict[int, Optional[float]]): Through-origin slope per D; None with fewer than 3
            points inside the fit window.
        c_pooled (Optional[float]): Slope over the window points of all D.
        reference (str): "exact" or "trotter".
        dt (float): Trotter step.
        errors (Dict[int, str]): Failed D values and their messages.
    """
    rows: List[FidelityRow]
    c_per_d: Dict[int, Optional[float]]
    c_pooled: Optional[float]
    reference: str
    dt: float
    errors: Dict[int, str]

    def spread(self) -> Optional[float]:
        """Ratio of the largest to the smallest per-D constant."""
        values = [c for c in self.c_per_d.values() if c]
        return max(values) / min(values) if len(values) > 1 else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "c_per_d": {str(d): c for d, c in self.c_per_d.items()},
            "c_pooled": self.c_pooled,
            "spread": self.spread(),
            "reference": self.reference,
            "dt": self.dt,
            "errors": {str(d): e for d, e in self.errors.items()},
        }


def _benchmark_one(job: FidelityJob) -> List[FidelityRow]:
    config = job.config
    n, dt = config.params.n, config.dt
    o0 = mpo_to_dense(config.initial.build(n, 4 ** (n // 2)))
    if job.reference == "exact":
        evolver = ExactEvolver(dense_hamiltonian(config.params))
        reference = lambda step: evolver.at(o0, step * dt)
    else:
        circuit = TrotterCircuit(config.params, dt)
        reference = lambda step: circuit.evolve(o0, step)

    rows: List[FidelityRow] = []
    service = EvolutionService(config)

    def on_step(row: StepRow, mpo):
        step = int(round(row.t / dt))
        if step % job.sample_every:
            return
        f = fidelity(mpo_to_dense(mpo), reference(step))
        rows.append(FidelityRow(config.d_max, row.t, row.eta_tot, 1.0 - f))

    service.on("step", on_step)
    asyncio.run(service.run())
    return rows


def through_origin_slope(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    """Least-squares c in y = c x, or None with fewer than 3 points."""
    if len(x) < MIN_FIT_POINTS or not np.any(x):
        return None
    return float(np.dot(x, y) / np.dot(x, x))


def _window(rows: Sequence[FidelityRow], dt: float):
    lo, hi = FIT_WINDOW
    picked = [r for r in rows if lo < r.infidelity < hi]
    x = np.array([r.eta_tot / dt for r in picked])
    y = np.array([r.infidelity for r in picked])
    return x, y


async def fidelity_benchmark_async(base: RunConfig, grid: Sequence[int], reference: str = "exact",
                                   sample_every: int = 10, service: Optional[SweepService] = None) -> FidelityReport:
    """
    Runs the MPO evolution of base for every D and compares it with dense evolution.

    Args:
        base (RunConfig): Template run; n must be at most 10. Early stopping is disabled.
        grid (Sequence[int]): Strictly ascending bond dimensions.
        reference (str): "exact" for e^{iHt} O e^{-iHt}, "trotter" for the dense Trotter circuit.
        sample_every (int): Trotter steps between dense comparisons.
        service (SweepService, optional): Preconfigured service.

    Returns:
        FidelityReport: Samples and fitted constants.
    """
    if base.params.n > MAX_BENCHMARK_SITES:
        raise PreconditionError(f"Fidelity benchmark needs n <= {MAX_BENCHMARK_SITES}, got {base.params.n}")
    if reference not in REFERENCES:
        raise PreconditionError(f"Unknown reference {reference!r}; expected one of {REFERENCES}")
    if sample_every < 1:
        raise PreconditionError(f"sample_every must be at least 1, got {sample_every}")
    grid = check_grid(grid)
    service = service or SweepService()
    base = replace(base, early_stop_factor=float("inf"))
    jobs = {d: FidelityJob(base.with_d_max(d), reference, sample_every) for d in grid}
    outcomes = await service.map(_benchmark_one, jobs)

    rows: List[FidelityRow] = []
    c_per_d: Dict[int, Optional[float]] = {}
    errors: Dict[int, str] = {}
    for d in grid:
        samples, error = outcomes[d]
        if error is not None:
            errors[d] = error
            continue
        rows.extend(samples)
        c_per_d[d] = through_origin_slope(*_window(samples, base.dt))
    c_pooled = through_origin_slope(*_window(rows, base.dt))
    logger.info(f"Fidelity benchmark ({reference}) n={base.params.n}: c per D {c_per_d}, pooled {c_pooled}")
    return FidelityReport(rows, c_per_d, c_pooled, reference, base.dt, errors)


def fidelity_benchmark(base: RunConfig, grid: Sequence[int], reference: str = "exact", sample_every: int = 10,
                       workers: Optional[int] = None) -> FidelityReport:
    """Synchronous fidelity_benchmark_async."""
    return asyncio.run(fidelity_benchmark_async(base, grid, reference, sample_every, SweepService(workers)))
