"""
Layered settings for the command line: flags beat the key=value config file, which beats the
per-subcommand defaults of experiments/experiment_manifest.py.
"""
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Callable, Dict, Optional, Tuple

from dotenv import dotenv_values

from core.errors import ConfigError, PreconditionError
from core.spin_model import ModelParams
from experiments.experiment_manifest import experiments
from logger_config import get_logger
from services.initial_condition_service import AbstractInitialCondition, InitialConditionFactory, ThermalCondition
from services.run_context import RunConfig

logger = get_logger("Settings")

REFERENCES = ("exact", "trotter")


@dataclass(frozen=True)
class Settings:
    """
    Fully resolved and validated settings of one CLI invocation.
    """
    subcommand: str
    out: str = "results"
    n: int = 14
    hx: float = 1.0
    hz: float = 1.0
    dt: float = 0.01
    eps: Optional[float] = None
    dmax: int = 32
    tmax: float = 6.0
    beta: float = 0.01
    dbeta: Optional[float] = None
    op: str = "local:y"
    dgrid: Tuple[int, ...] = (4, 8, 16, 32)
    window: Tuple[float, float] = (-9.0, 9.0)
    degree: int = 9
    bins: int = 40
    workers: Optional[int] = None
    h0: Tuple[float, float] = (0.0, 1.0)
    sample_every: int = 10
    reference: str = "exact"
    checkpoint_every: int = 0
    resume: Optional[str] = None
    timing: bool = False

    def params(self) -> ModelParams:
        return ModelParams(self.n, self.hx, self.hz)

    def initial(self) -> AbstractInitialCondition:
        return InitialConditionFactory.get_initial_condition(self.op)

    def run_config(self, d_max: Optional[int] = None, checkpoint_path: Optional[str] = None) -> RunConfig:
        return RunConfig(params=self.params(), initial=self.initial(), t_max=self.tmax,
                         d_max=self.dmax if d_max is None else d_max, dt=self.dt, eps=self.eps,
                         checkpoint_path=checkpoint_path,
                         checkpoint_every=self.checkpoint_every if checkpoint_path else 0)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


def _grid(text: str) -> Tuple[int, ...]:
    # "4,8,12" or an inclusive range "4:64:4"
    if ":" in text:
        start, stop, step = (int(v) for v in text.split(":"))
        return tuple(range(start, stop + 1, step))
    return tuple(int(v) for v in text.replace(" ", ",").split(",") if v)


def _pair(text: str) -> Tuple[float, float]:
    values = [float(v) for v in text.replace(",", " ").split()]
    if len(values) != 2:
        raise ValueError(f"expected two numbers, got {len(values)}")
    return values[0], values[1]


def _flag(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


PARSERS: Dict[str, Callable[[str], Any]] = {
    "n": int,
    "hx": float,
    "hz": float,
    "dt": float,
    "eps": _optional_float,
    "dmax": int,
    "tmax": float,
    "beta": float,
    "dbeta": _optional_float,
    "op": str,
    "dgrid": _grid,
    "window": _pair,
    "degree": int,
    "bins": int,
    "workers": int,
    "h0": _pair,
    "sample_every": int,
    "reference": str,
    "checkpoint_every": int,
    "timing": _flag,
}


def _parse(key: str, value: Any) -> Any:
    if not isinstance(value, str) or key not in PARSERS:
        return value
    try:
        return PARSERS[key](value)
    except ValueError as e:
        raise ConfigError(key, f"cannot read {value!r} ({e})")


def read_config_file(path: str) -> Dict[str, Any]:
    """
    Reads KEY=value lines with python-dotenv; keys are the upper-case setting names.

    Raises:
        ConfigError: If the file is missing, a key is unknown or a value does not parse.
    """
    if not os.path.isfile(path):
        raise ConfigError("config", f"file not found: {path}")
    values: Dict[str, Any] = {}
    h0: Dict[str, float] = {}
    for key, value in dotenv_values(path).items():
        name = key.strip().lower()
        if name in ("h0_hx", "h0_hz"):
            if value is not None:
                h0[name] = _parse("hx", value)
            continue
        if name not in PARSERS:
            raise ConfigError(key, f"unknown setting in {path}")
        if value is not None:
            values[name] = _parse(name, value)
    if h0:
        hx, hz = values.get("h0", (0.0, 1.0))
        values["h0"] = (h0.get("h0_hx", hx), h0.get("h0_hz", hz))
    return values


def _manifest_defaults(subcommand: str) -> Dict[str, Any]:
    for experiment in experiments:
        if experiment["name"] == subcommand:
            return dict(experiment["defaults"])
    raise ConfigError("subcommand", f"unknown subcommand {subcommand!r}")


def validate(settings: Settings) -> Settings:
    """Checks every field against the run invariants; the first violation raises ConfigError."""
    s = settings
    checks = [
        ("n", s.n >= 2, "must be at least 2"),
        ("dt", s.dt > 0, "must be positive"),
        ("eps", s.eps is None or s.eps > 0, "must be positive"),
        ("dmax", s.dmax >= 2, "must be at least 2"),
        ("tmax", s.tmax >= 0, "must be nonnegative"),
        ("beta", s.beta >= 0, "must be nonnegative"),
        ("dbeta", s.dbeta is None or s.dbeta > 0, "must be positive"),
        ("dgrid", len(s.dgrid) > 0 and all(d >= 2 for d in s.dgrid), "needs values of at least 2"),
        ("dgrid", all(b > a for a, b in zip(s.dgrid, s.dgrid[1:])), "must be strictly ascending"),
        ("window", s.window[0] < s.window[1], "lower edge must be below the upper edge"),
        ("degree", s.degree >= 1, "must be at least 1"),
        ("bins", s.bins >= 1, "must be at least 1"),
        ("workers", s.workers is None or s.workers >= 1, "must be at least 1"),
        ("sample_every", s.sample_every >= 1, "must be at least 1"),
        ("reference", s.reference in REFERENCES, f"must be one of {REFERENCES}"),
        ("checkpoint_every", s.checkpoint_every >= 0, "must be nonnegative"),
        ("resume", s.resume is None or os.path.isfile(s.resume), "snapshot file not found"),
    ]
    for field, ok, message in checks:
        if not ok:
            raise ConfigError(field, message)
    try:
        s.params()
    except PreconditionError as e:
        raise ConfigError("hx", str(e))
    try:
        initial = s.initial()
        if not isinstance(initial, ThermalCondition):
            initial.build(s.n, s.dmax)
    except PreconditionError as e:
        raise ConfigError("op", str(e))
    return s


def load_settings(subcommand: str, overrides: Optional[Dict[str, Any]] = None,
                  config_path: Optional[str] = None) -> Settings:
    """
    Resolves settings for a subcommand.

    Args:
        subcommand (str): One of the names in the experiment manifest.
        overrides (Dict[str, Any], optional): Command-line values; None entries are ignored.
        config_path (str, optional): key=value config file.

    Returns:
        Settings: Validated settings.

    Raises:
        ConfigError: Naming the offending field.
    """
    values = _manifest_defaults(subcommand)
    if config_path:
        values.update(read_config_file(config_path))
    cli = {k: _parse(k, v) for k, v in (overrides or {}).items() if v is not None}
    if "workers" not in cli and os.getenv("TEBD_WORKERS"):
        cli["workers"] = _parse("workers", os.getenv("TEBD_WORKERS"))
    values.update(cli)

    known = {f.name for f in fields(Settings)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown setting")
    for key in ("dgrid", "window", "h0"):
        if key in values:
            values[key] = tuple(values[key])
    settings = validate(replace(Settings(subcommand=subcommand), **values))
    logger.debug(f"Settings for {subcommand}: {settings}")
    return settings
