import argparse
import importlib
import sys
from datetime import datetime, timezone
from typing import Callable, Dict, List, Optional

import dotenv

from core.errors import ConfigError
from experiments.experiment_manifest import experiments
from logger_config import configure_logging, get_logger
from services.output_service import OutputService
from settings import load_settings

logger = get_logger("App")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

# flags that are not settings overrides
CONTROL_FLAGS = ("subcommand", "config", "verbose")


def load_experiments() -> Dict[str, Callable]:
    """
    Imports experiments.<name> for every manifest entry and returns its entry function.

    Returns:
        Dict[str, Callable]: Subcommand name -> function(settings, output) -> summary dict.
    """
    available = {}
    for experiment in experiments:
        name = experiment["name"]
        module = importlib.import_module(f"experiments.{name}")
        available[name] = getattr(module, name)
    return available


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file (upper-case setting names)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--n", type=int, help="number of sites")
    common.add_argument("--hx", type=float, help="transverse field of the evolving Hamiltonian")
    common.add_argument("--hz", type=float, help="longitudinal field of the evolving Hamiltonian")
    common.add_argument("--dt", type=float, help="Trotter step")
    common.add_argument("--eps", help="truncation error tolerance")
    common.add_argument("--dmax", type=int, help="bond dimension of a single run")
    common.add_argument("--tmax", type=float, help="final time")
    common.add_argument("--beta", type=float, help="inverse temperature of the thermal state")
    common.add_argument("--dbeta", help="imaginary-time step")
    common.add_argument("--op", help="initial operator, e.g. local:y, local:zz, extensive:xx, hamiltonian:1,1")
    common.add_argument("--dgrid", help="bond-dimension grid, e.g. 4,8,16 or 4:64:4")
    common.add_argument("--window", nargs=2, type=float, metavar=("LOW", "HIGH"), help="energy window for spacings")
    common.add_argument("--degree", type=int, help="degree of the unfolding polynomial")
    common.add_argument("--bins", type=int, help="histogram bins")
    common.add_argument("--workers", type=int, help="parallel runs in a sweep")
    common.add_argument("--h0", help="fields 'hx,hz' of the thermal Hamiltonian")
    common.add_argument("--sample-every", dest="sample_every", type=int, help="steps between dense comparisons")
    common.add_argument("--reference", choices=("exact", "trotter"), help="dense reference evolution")
    common.add_argument("--checkpoint-every", dest="checkpoint_every", type=int, help="steps between snapshots")
    common.add_argument("--resume", help="snapshot to resume an evolve run from")
    common.add_argument("--timing", action="store_true", default=None, help="add per-step wall time to run CSVs")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="tebd", description="Trotterized operator dynamics with matrix product operators.")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for experiment in experiments:
        subparsers.add_parser(experiment["name"], parents=[common], help=experiment["description"])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs one subcommand.

    Returns:
        int: 0 on success, 1 on a runtime failure (partial files plus error.json), 2 on a
        configuration error (nothing written).
    """
    dotenv.load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    configure_logging("DEBUG" if args.verbose else None)

    overrides = {k: v for k, v in vars(args).items() if k not in CONTROL_FLAGS and v is not None}
    try:
        settings = load_settings(args.subcommand, overrides, args.config)
    except ConfigError as e:
        logger.error(f"Configuration error in {e.field}: {e}")
        return EXIT_CONFIG

    output = OutputService(settings.out)
    started = datetime.now(timezone.utc)
    logger.info(f"Running {settings.subcommand} into {settings.out}")
    try:
        summary = load_experiments()[settings.subcommand](settings, output)
    except Exception as e:
        logger.error(f"{settings.subcommand} failed: {type(e).__name__}: {e}")
        output.write_error(e, {"subcommand": settings.subcommand})
        output.write_metadata(settings.subcommand, settings.to_dict(), started, {"status": "failed"})
        output.write_manifest()
        return EXIT_RUNTIME

    output.write_metadata(settings.subcommand, settings.to_dict(), started, summary)
    output.write_manifest()
    logger.info(f"{settings.subcommand} finished")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
