import asyncio
from typing import Any, Dict

from experiments.deps import sweep_service, write_profile
from logger_config import get_logger
from services.output_service import OutputService
from services.sweep_service import deps_profile_async, thermal_base
from settings import Settings

logger = get_logger("Experiment")


def thermal(settings: Settings, output: OutputService) -> Dict[str, Any]:
    """D_eps(t) after a quench from exp(-beta H(h0)) to H(hx, hz)."""
    base = thermal_base(settings.beta, settings.params(), settings.tmax, d_max=settings.dgrid[0], eps=settings.eps,
                        dt=settings.dt, h0=settings.h0, dbeta=settings.dbeta)
    logger.info(f"Thermal quench: beta={settings.beta}, H0=H({settings.h0[0]:g},{settings.h0[1]:g}) "
                f"-> {settings.params().label}")
    table = asyncio.run(deps_profile_async(base, settings.dgrid, sweep_service(settings)))
    exceeded = any(s.preparation.get("thermal_prep_eta_exceeded", False) for s in table.series.values())
    if exceeded:
        logger.warning("Imaginary-time error above eps/10 in at least one run; see thermal_prep_eta_exceeded")
    return write_profile(table, settings, output,
                         extra={"beta": settings.beta, "thermal_prep_eta_exceeded": exceeded})
