import asyncio
from typing import Any, Dict

from logger_config import get_logger
from services.fidelity_service import fidelity_benchmark_async
from services.output_service import OutputService
from services.sweep_service import SweepService
from settings import Settings

logger = get_logger("Experiment")


def fidelity(settings: Settings, output: OutputService) -> Dict[str, Any]:
    """
    Infidelity against dense evolution for every D of the grid, and the fitted constant c.
    """
    base = settings.run_config(d_max=settings.dgrid[0])
    report = asyncio.run(fidelity_benchmark_async(base, settings.dgrid, settings.reference, settings.sample_every,
                                                  SweepService(settings.workers)))
    output.write_fidelity("fidelity.csv", report)
    summary = report.to_dict()
    output.write_json("fidelity_report.json", summary)
    c = report.c_pooled if report.c_pooled is not None else 0.5
    output.write_plot_script("plot_fidelity.py", "fidelity", csv="fidelity.csv", c=c, dt=settings.dt)
    return summary
