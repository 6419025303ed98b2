from typing import Any, Dict

from core.exact_oracle import lsd_pipeline, spacing_histogram
from logger_config import get_logger
from services.output_service import OutputService
from settings import Settings

logger = get_logger("Experiment")


def lsd(settings: Settings, output: OutputService) -> Dict[str, Any]:
    """
    Certifies chaos or integrability of H(hx, hz) from its level-spacing distribution.

    Args:
        settings (Settings): Uses n, hx, hz, window, degree and bins.
        output (OutputService): Target for the histogram, the raw spacings and the report.

    Returns:
        Dict[str, Any]: The KS report.
    """
    params = settings.params()
    data, samples, report = lsd_pipeline(params, settings.window, settings.degree)
    histogram = spacing_histogram(samples, bins=settings.bins)

    output.write_histogram("lsd_histogram.csv", histogram)
    output.write_csv("lsd_spacings.csv", ["s (mean spacing)"], ((s,) for s in samples))
    summary = report.to_dict()
    summary.update({
        "model": params.label,
        "n": params.n,
        "window": list(settings.window),
        "sector_dims": {"+": int((data.parity_labels == 1).sum()), "-": int((data.parity_labels == -1).sum())},
        "mean_spacing": histogram.mean_spacing,
    })
    output.write_json("lsd_report.json", summary)
    output.write_plot_script("plot_lsd.py", "lsd", csv="lsd_histogram.csv")
    return summary
