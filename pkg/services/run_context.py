from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional

from core.errors import PreconditionError
from core.spin_model import ModelParams
from services.initial_condition_service import AbstractInitialCondition

DEFAULT_DT = 0.01
DEFAULT_EARLY_STOP_FACTOR = 10.0


@dataclass(frozen=True)
class RunConfig:
    """
    Everything one evolution run needs. Runs are deterministic, so there is no seed.

    Attributes:
        params (ModelParams): Chain length and fields of the evolving Hamiltonian.
        initial (AbstractInitialCondition): Initial operator descriptor.
        t_max (float): Final time.
        d_max (int): Maximum bond dimension, at least 2.
        dt (float): Trotter step.
        eps (Optional[float]): Error tolerance; None takes the initial condition's default.
        renormalize (bool): Move kept norms into log_norm after every gate.
        early_stop_factor (float): Stop once eta_tot exceeds this multiple of eps.
        checkpoint_path (Optional[str]): HDF5 snapshot target.
        checkpoint_every (int): Steps between snapshots; 0 disables periodic snapshots.
    """
    params: ModelParams
    initial: AbstractInitialCondition
    t_max: float
    d_max: int
    dt: float = DEFAULT_DT
    eps: Optional[float] = None
    renormalize: bool = False
    early_stop_factor: float = DEFAULT_EARLY_STOP_FACTOR
    checkpoint_path: Optional[str] = None
    checkpoint_every: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise PreconditionError(f"dt must be positive, got {self.dt}")
        if self.eps is not None and not self.eps > 0:
            raise PreconditionError(f"eps must be positive, got {self.eps}")
        if self.d_max < 2:
            raise PreconditionError(f"d_max must be at least 2, got {self.d_max}")
        if self.t_max < 0:
            raise PreconditionError(f"t_max must be nonnegative, got {self.t_max}")
        if not self.early_stop_factor >= 1:
            raise PreconditionError(f"early_stop_factor must be at least 1, got {self.early_stop_factor}")
        if self.checkpoint_every < 0:
            raise PreconditionError(f"checkpoint_every must be nonnegative, got {self.checkpoint_every}")

    @property
    def tolerance(self) -> float:
        return self.eps if self.eps is not None else self.initial.default_eps

    @property
    def steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def with_d_max(self, d_max: int) -> "RunConfig":
        return replace(self, d_max=d_max)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.params.n,
            "hx": self.params.hx,
            "hz": self.params.hz,
            "initial": self.initial.describe(),
            "t_max": self.t_max,
            "d_max": self.d_max,
            "dt": self.dt,
            "eps": self.tolerance,
            "renormalize": self.renormalize,
            "early_stop_factor": self.early_stop_factor,
        }


class RunContext:
    """
    Mutable bookkeeping for a single evolution run, filled in while the run progresses.

    Attributes:
        config (RunConfig): The run's configuration.
        step (int): Last completed Trotter step.
        eta_tot (float): Accumulated truncation error so far.
        t_star (Optional[float]): Interpolated crossing time once eta_tot exceeds eps.
        stopped_early (bool): Whether the early-stop threshold ended the run.
        checkpoints (List[str]): Snapshot files written so far.
        preparation (Dict[str, Any]): Notes from building the initial operator.
        final_status (Optional[str]): "completed", "stopped" or "failed".
    """
    def __init__(self, config: RunConfig):
        self.config = config
        self.step: int = 0
        self.eta_tot: float = 0.0
        self.t_star: Optional[float] = None
        self.stopped_early: bool = False
        self.checkpoints: List[str] = []
        self.preparation: Dict[str, Any] = {}
        self.final_status: Optional[str] = None
