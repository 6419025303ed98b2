import asyncio
from typing import Any, Dict

from logger_config import get_logger
from services.evolution_service import EvolutionService, crossing_time
from services.output_service import OutputService
from settings import Settings

logger = get_logger("Experiment")

CHECKPOINT_FILE = "evolve_checkpoint.h5"


def evolve(settings: Settings, output: OutputService) -> Dict[str, Any]:
    """
    One evolution run at d_max = dmax, optionally checkpointed or resumed from a snapshot.

    Returns:
        Dict[str, Any]: Final eta_tot, crossing time and bond dimension.
    """
    checkpoint = None
    if settings.checkpoint_every:
        checkpoint = str(output.path_for(CHECKPOINT_FILE))
        # HDF5 files carry library metadata, so no byte-identity promise
        output.nondeterministic.add(CHECKPOINT_FILE)
    config = settings.run_config(checkpoint_path=checkpoint)
    service = EvolutionService(config, resume_from=settings.resume)
    service.once("crossing", lambda t_star: logger.info(f"eta_tot crossed eps={config.tolerance:g} at t={t_star:.4f}"))
    service.on("checkpoint", lambda path: logger.debug(f"Checkpoint written to {path}"))
    series = asyncio.run(service.run())

    output.write_series("evolve_series.csv", series, timing=settings.timing)
    summary = {
        "eps": config.tolerance,
        "t_star": crossing_time(series, config.tolerance),
        "final_t": float(series.t[-1]),
        "final_eta_tot": series.final_eta,
        "final_max_bond": int(series.max_bond[-1]),
        "stopped_early": series.stopped_early,
        "preparation": series.preparation,
    }
    output.write_json("evolve_summary.json", summary)
    output.write_plot_script("plot_evolve.py", "series", csv="evolve_series.csv", eps=config.tolerance)
    return summary
