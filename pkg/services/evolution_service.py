import asyncio
import time
from typing import List, Optional

import numpy as np

from core.errors import PreconditionError, RunFailure
from core.mpo import Mpo, apply_layer, load_snapshot, save_snapshot
from core.spin_model import trotter_step
from logger_config import get_logger
from services.event_emitter import EventEmitter
from services.records import StepRow, TimeSeries
from services.run_context import RunConfig, RunContext

logger = get_logger("Evolution")


class EvolutionService(EventEmitter):
    """
    Heisenberg-picture Trotter evolution of one initial operator at a fixed bond-dimension cap.

    Events:
        "step" (StepRow, Mpo): after every Trotter step.
        "crossing" (float): once, when eta_tot first exceeds eps.
        "checkpoint" (str): after a snapshot was written.
    """
    def __init__(self, config: RunConfig, resume_from: Optional[str] = None):
        """
        Initializes the EvolutionService.

        Args:
            config (RunConfig): Run configuration.
            resume_from (str, optional): Snapshot written by an earlier run with the same config.
        """
        super().__init__()
        self.config = config
        self.context = RunContext(config)
        self.resume_from = resume_from
        self.final_mpo: Optional[Mpo] = None

    def _initial_state(self):
        config = self.config
        if self.resume_from:
            mpo, extra = load_snapshot(self.resume_from)
            if mpo.n != config.params.n:
                raise PreconditionError(f"Snapshot has {mpo.n} sites, config expects {config.params.n}")
            rows = [StepRow(float(t), float(e), int(d), float(w)) for t, e, d, w in
                    zip(extra["t"], extra["eta_tot"], extra["max_bond"], extra["wall_ms"])]
            self.context.step = int(extra["step"])
            self.context.preparation = {k[5:]: v for k, v in extra.items() if k.startswith("prep_")}
            logger.info(f"Resuming from {self.resume_from} at step {self.context.step}")
            return mpo, rows
        mpo, preparation = config.initial.build_with_report(config.params.n, config.d_max, eps=config.tolerance)
        self.context.preparation = preparation
        return mpo, [StepRow(0.0, 0.0, mpo.max_bond, 0.0)]

    def _snapshot(self, mpo: Mpo, rows: List[StepRow], path: str):
        extra = {
            "step": self.context.step,
            "t": np.array([r.t for r in rows]),
            "eta_tot": np.array([r.eta_tot for r in rows]),
            "max_bond": np.array([r.max_bond for r in rows]),
            "wall_ms": np.array([r.wall_ms for r in rows]),
            "initial": self.config.initial.describe(),
        }
        extra.update({f"prep_{k}": v for k, v in self.context.preparation.items()})
        save_snapshot(mpo, path, extra)
        self.context.checkpoints.append(path)

    async def run(self) -> TimeSeries:
        """
        Runs until t_max or until eta_tot exceeds early_stop_factor * eps.

        Returns:
            TimeSeries: eta_tot after every step.

        Raises:
            RunFailure: On memory exhaustion, after writing a snapshot if a checkpoint path is set.
        """
        config = self.config
        eps = config.tolerance
        ctx = self.context
        mpo, rows = self._initial_state()
        ctx.eta_tot = rows[-1].eta_tot
        ctx.t_star = crossing_time(TimeSeries.from_rows(rows), eps)
        scheme = trotter_step(config.params, config.dt)
        logger.info(f"Evolving {config.initial.describe()} under {config.params.label}, n={config.params.n}, "
                    f"d_max={config.d_max}, dt={config.dt}, t_max={config.t_max}, eps={eps:g}")

        try:
            for k in range(ctx.step + 1, config.steps + 1):
                if ctx.eta_tot > config.early_stop_factor * eps:
                    break
                started = time.perf_counter()
                for layer in scheme.layers:
                    ctx.eta_tot += apply_layer(mpo, layer, config.d_max, renormalize=config.renormalize)
                ctx.step = k
                row = StepRow(k * config.dt, ctx.eta_tot, mpo.max_bond, 1e3 * (time.perf_counter() - started))
                rows.append(row)
                logger.debug(f"t={row.t:.4f} eta_tot={row.eta_tot:.3e} max_bond={row.max_bond}")
                if self.has_listeners("step"):
                    await self.emit("step", row, mpo)

                if ctx.t_star is None and ctx.eta_tot > eps:
                    ctx.t_star = _interpolate(rows[-2], row, eps)
                    await self.emit("crossing", ctx.t_star)
                if config.checkpoint_path and config.checkpoint_every and k % config.checkpoint_every == 0:
                    self._snapshot(mpo, rows, config.checkpoint_path)
                    await self.emit("checkpoint", config.checkpoint_path)
        except MemoryError:
            ctx.final_status = "failed"
            path = config.checkpoint_path
            if path:
                self._snapshot(mpo, rows, path)
            logger.error(f"Out of memory at step {ctx.step} (d_max={config.d_max}); snapshot: {path}")
            raise RunFailure(f"Out of memory at t={ctx.step * config.dt:g} with d_max={config.d_max}", path)

        if ctx.eta_tot > config.early_stop_factor * eps and ctx.step < config.steps:
            ctx.stopped_early = True
        ctx.final_status = "stopped" if ctx.stopped_early else "completed"
        logger.info(f"Run {ctx.final_status} at t={rows[-1].t:g}: eta_tot={ctx.eta_tot:.3e}, "
                    f"max bond {mpo.max_bond}, t*={ctx.t_star}")
        self.final_mpo = mpo
        return TimeSeries.from_rows(rows, config.to_dict(), stopped_early=ctx.stopped_early,
                                    preparation=dict(ctx.preparation))


def run_evolution(config: RunConfig, resume_from: Optional[str] = None) -> TimeSeries:
    """Synchronous form of EvolutionService.run for callers outside an event loop."""
    return asyncio.run(EvolutionService(config, resume_from).run())


def _interpolate(before: StepRow, after: StepRow, eps: float) -> float:
    rise = after.eta_tot - before.eta_tot
    fraction = (eps - before.eta_tot) / rise if rise > 0 else 1.0
    return before.t + fraction * (after.t - before.t)


def crossing_time(series: TimeSeries, eps: float) -> Optional[float]:
    """
    First time eta_tot exceeds eps, linearly interpolated between the bracketing steps.

    Returns:
        Optional[float]: None when eps is never exceeded.
    """
    above = np.flatnonzero(series.eta_tot > eps)
    if not len(above):
        return None
    i = int(above[0])
    if i == 0:
        return float(series.t[0])
    rows = series.rows()
    return float(_interpolate(rows[i - 1], rows[i], eps))
