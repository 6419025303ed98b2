import asyncio
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Any, Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from core.errors import PreconditionError
from core.spin_model import ModelParams
from logger_config import get_logger
from services.evolution_service import crossing_time, run_evolution
from services.event_emitter import EventEmitter
from services.initial_condition_service import ThermalCondition
from services.records import DepsRow, DepsTable, TimeSeries
from services.run_context import RunConfig

logger = get_logger("Sweep")

RunOutcome = Tuple[Optional[TimeSeries], Optional[str]]


def resolve_workers(workers: Optional[int] = None) -> int:
    """Explicit count, else the TEBD_WORKERS environment variable, else 1."""
    if workers is None:
        raw = os.getenv("TEBD_WORKERS")
        if raw:
            try:
                workers = int(raw)
            except ValueError:
                raise PreconditionError(f"TEBD_WORKERS must be an integer, got {raw!r}")
        else:
            workers = 1
    if workers < 1:
        raise PreconditionError(f"Worker count must be at least 1, got {workers}")
    return workers


def _guarded(fn: Callable[[Any], Any], item: Any) -> Tuple[Any, Optional[str]]:
    # runs in a worker; errors travel back as text
    try:
        return fn(item), None
    except Exception as e:
        return None, f"{type(e).__name__}: {e}"


class SweepService(EventEmitter):
    """
    Runs independent jobs in a process pool, or one after another with a single worker.

    Results are keyed, so their order never depends on completion order.

    Events:
        "rundone" (key, result | str): after each job, with its result or the error text.
    """
    def __init__(self, workers: Optional[int] = None):
        super().__init__()
        self.workers = resolve_workers(workers)

    async def map(self, fn: Callable[[Any], Any], items: Dict[Hashable, Any]) -> Dict[Hashable, Tuple[Any, Optional[str]]]:
        """
        Applies a picklable top-level function to every item.

        Args:
            fn (Callable): Job function; it runs outside the event loop.
            items (Dict[Hashable, Any]): Job inputs keyed by an identifier such as D.

        Returns:
            Dict[Hashable, Tuple[Any, Optional[str]]]: (result, None) or (None, error text) per key,
            in the order of items.
        """
        loop = asyncio.get_running_loop()
        results: Dict[Hashable, Tuple[Any, Optional[str]]] = {}

        async def finish(key, outcome):
            result, error = outcome
            if error is not None:
                logger.error(f"Run {key} failed: {error}")
            results[key] = outcome
            await self.emit("rundone", key, result if error is None else error)

        if self.workers == 1 or len(items) <= 1:
            for key, item in items.items():
                await finish(key, await loop.run_in_executor(None, _guarded, fn, item))
        else:
            with ProcessPoolExecutor(max_workers=min(self.workers, len(items))) as pool:
                async def submit(key, item):
                    await finish(key, await loop.run_in_executor(pool, _guarded, fn, item))

                await asyncio.gather(*(submit(key, item) for key, item in items.items()))
        return {key: results[key] for key in items}

    async def run(self, configs: Dict[Hashable, RunConfig]) -> Dict[Hashable, RunOutcome]:
        """Evolves every config; see map."""
        return await self.map(run_evolution, configs)


def check_grid(grid: Sequence[int]) -> List[int]:
    grid = [int(d) for d in grid]
    if not grid:
        raise PreconditionError("Bond-dimension grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError(f"Bond-dimension grid must be strictly ascending, got {grid}")
    return grid


async def deps_profile_async(base: RunConfig, grid: Sequence[int], service: Optional[SweepService] = None) -> DepsTable:
    """
    Crossing times t*(D) of base over the D grid; failed runs become rows with an error.

    Args:
        base (RunConfig): Template config; its d_max is replaced by each grid value.
        grid (Sequence[int]): Strictly ascending bond dimensions.
        service (SweepService, optional): Preconfigured service, for listeners and worker count.
    """
    grid = check_grid(grid)
    service = service or SweepService()
    eps = base.tolerance
    outcomes = await service.run({d: base.with_d_max(d) for d in grid})

    rows = []
    series = {}
    for d in grid:
        result, error = outcomes[d]
        if error is not None:
            rows.append(DepsRow(d, None, error))
            continue
        series[d] = result
        rows.append(DepsRow(d, crossing_time(result, eps)))
    table = DepsTable(rows=rows, eps=eps, config=base.to_dict(), series=series)
    for pair in table.inversions():
        logger.warning(f"Crossing time decreases from D={pair[0]} to D={pair[1]}")
    logger.info(f"Sweep over D={grid}: {len(table.points())} crossings, saturation level {table.saturation_level()}")
    return table


def deps_profile(base: RunConfig, grid: Sequence[int], workers: Optional[int] = None) -> DepsTable:
    """Synchronous deps_profile_async."""
    return asyncio.run(deps_profile_async(base, grid, SweepService(workers)))


def thermal_base(beta: float, h1: ModelParams, t_max: float, d_max: int = 2, eps: Optional[float] = None,
                 dt: float = 0.01, h0: Tuple[float, float] = (0.0, 1.0), dbeta: Optional[float] = None) -> RunConfig:
    """Run template for a quench from the thermal state of H(h0) to H1."""
    initial = ThermalCondition(beta=beta, hx=h0[0], hz=h0[1], dbeta=dbeta)
    return RunConfig(params=h1, initial=initial, t_max=t_max, d_max=d_max, dt=dt, eps=eps)


def thermal_quench(beta: float, h1: ModelParams, grid: Sequence[int], eps: float = 1e-6, t_max: float = 6.0,
                   dt: float = 0.01, h0: Tuple[float, float] = (0.0, 1.0), dbeta: Optional[float] = None,
                   workers: Optional[int] = None) -> DepsTable:
    """
    D_eps(t) profile of exp(-beta H0) evolved under H1. Each grid point prepares its own thermal
    state at its own d_max.
    """
    base = thermal_base(beta, h1, t_max, check_grid(grid)[0], eps, dt, h0, dbeta)
    table = deps_profile(base, grid, workers)
    logger.info(f"Thermal quench beta={beta} to {h1.label}, n={h1.n}: eta_tot of thermal runs grows with n")
    return table


async def eta_n_scaling_async(base: RunConfig, n_values: Iterable[int],
                              service: Optional[SweepService] = None) -> Dict[int, TimeSeries]:
    """Runs base at several chain lengths; failed lengths are logged and left out."""
    service = service or SweepService()
    configs = {n: replace(base, params=ModelParams(n, base.params.hx, base.params.hz)) for n in n_values}
    outcomes = await service.run(configs)
    return {n: series for n, (series, error) in outcomes.items() if error is None}


def eta_n_scaling(base: RunConfig, n_values: Iterable[int], workers: Optional[int] = None) -> Dict[int, TimeSeries]:
    """eta_tot(t) curves of the same protocol at several n."""
    return asyncio.run(eta_n_scaling_async(base, n_values, SweepService(workers)))
