import asyncio
from typing import Any, Dict, Optional

from core.errors import PreconditionError, RunFailure
from logger_config import get_logger
from services.growth_fit import fit_growth, growth_rate
from services.output_service import OutputService
from services.records import DepsTable
from services.sweep_service import SweepService, deps_profile_async
from settings import Settings

logger = get_logger("Experiment")


def sweep_service(settings: Settings) -> SweepService:
    service = SweepService(settings.workers)

    def progress(d, result):
        if isinstance(result, str):
            return
        logger.info(f"D={d} done: t={result.t[-1]:g}, eta_tot={result.final_eta:.3e}")

    service.on("rundone", progress)
    return service


def write_profile(table: DepsTable, settings: Settings, output: OutputService,
                  extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Writes the crossing-time table, per-D series, the growth fit and a plot script. Entries of
    extra are added to the summary.

    Raises:
        RunFailure: If every run of the sweep failed; the partial files stay on disk.
    """
    output.write_deps("deps_table.csv", table)
    for d, series in sorted(table.series.items()):
        output.write_series(f"deps_series_D{d}.csv", series, timing=settings.timing)
    output.write_plot_script("plot_deps.py", "deps", csv="deps_table.csv")

    summary: Dict[str, Any] = {
        "eps": table.eps,
        "rows": [r._asdict() for r in table.rows],
        "inversions": [list(pair) for pair in table.inversions()],
        "saturation_level": table.saturation_level(),
        "failures": {r.d: r.error for r in table.failures()},
        "preparation": {d: s.preparation for d, s in sorted(table.series.items()) if s.preparation},
    }
    summary.update(extra or {})
    try:
        report = fit_growth(table)
        output.write_json("fit_report.json", report.to_dict())
        summary["fit"] = {"preferred": report.preferred, "h_q": growth_rate(report)}
    except PreconditionError as e:
        logger.warning(f"No growth fit: {e}")
        summary["fit"] = None
        summary["fit_error"] = str(e)
    output.write_json("deps_summary.json", summary)

    if len(table.failures()) == len(table.rows):
        raise RunFailure(f"All {len(table.rows)} runs of the sweep failed; first error: {table.rows[0].error}")
    return summary


def deps(settings: Settings, output: OutputService) -> Dict[str, Any]:
    """
    D_eps(t) of the operator settings.op from crossing times over settings.dgrid.

    Returns:
        Dict[str, Any]: Table rows, inversions, saturation level and the preferred growth law.
    """
    base = settings.run_config(d_max=settings.dgrid[0])
    table = asyncio.run(deps_profile_async(base, settings.dgrid, sweep_service(settings)))
    return write_profile(table, settings, output)
