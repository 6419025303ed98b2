"""
Imaginary-time preparation of thermal operators exp(-beta H0) from the identity.
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from core.errors import PreconditionError
from core.mpo import Mpo, apply_layer, mpo_identity, normalize
from core.spin_model import GateKind, ModelParams, trotter_step
from logger_config import get_logger

logger = get_logger("Thermal")

DEFAULT_THERMAL_EPS = 1e-6
MIN_DBETA = 1e-3


@dataclass
class ThermalState:
    """
    Result of imaginary-time preparation.

    Attributes:
        mpo (Mpo): Operator proportional to exp(-beta H0), unit Hilbert-Schmidt norm.
        eta (float): Accumulated imaginary-time truncation error.
        steps (int): Number of imaginary-time Trotter steps.
        dbeta (float): Imaginary-time step.
        eta_exceeded (bool): Whether eta broke the eps/10 bound of the real-time run.
    """
    mpo: Mpo
    eta: float
    steps: int
    dbeta: float
    eta_exceeded: bool = False


def imaginary_step_size(beta: float, dbeta: Optional[float] = None) -> Tuple[int, float]:
    """
    Number of steps and step size for reaching beta.

    Without an explicit dbeta the step is beta/10, floored at 1e-3; when the floor does not
    divide beta the step is shrunk to beta/ceil(beta/1e-3).

    Raises:
        PreconditionError: If beta < 0, or an explicit dbeta is not positive or does not divide beta.
    """
    if beta < 0:
        raise PreconditionError(f"beta must be nonnegative, got {beta}")
    if beta == 0:
        return 0, float(dbeta or MIN_DBETA)
    if dbeta is not None:
        if not dbeta > 0:
            raise PreconditionError(f"dbeta must be positive, got {dbeta}")
        ratio = beta / dbeta
        steps = int(round(ratio))
        if steps < 1 or abs(ratio - steps) > 1e-9 * max(1.0, ratio):
            raise PreconditionError(f"dbeta={dbeta} does not divide beta={beta}")
        return steps, float(dbeta)
    if beta / 10 >= MIN_DBETA * (1 - 1e-12):
        return 10, beta / 10
    steps = math.ceil(beta / MIN_DBETA - 1e-9)
    return steps, beta / steps


def thermal_prepare(h0: ModelParams, beta: float, dbeta: Optional[float] = None, d_max: int = 64,
                    eps: float = DEFAULT_THERMAL_EPS) -> ThermalState:
    """
    Flows the identity MPO to exp(-beta H0) with imaginary-time Trotter steps.

    Every gate renormalizes its kept spectrum so the norm stays O(1); the result is rescaled to
    unit Hilbert-Schmidt norm at the end.

    Args:
        h0 (ModelParams): Hamiltonian of the thermal state.
        beta (float): Inverse temperature, nonnegative.
        dbeta (float, optional): Imaginary-time step; chosen automatically when omitted.
        d_max (int): Bond dimension cap, the same one the real-time run uses.
        eps (float): Real-time tolerance; imaginary-time error above eps/10 is logged and flagged.

    Returns:
        ThermalState: Operator, imaginary-time truncation error and step data.
    """
    steps, dbeta = imaginary_step_size(beta, dbeta)
    mpo = mpo_identity(h0.n)
    eta = 0.0
    if steps:
        scheme = trotter_step(h0, dbeta, GateKind.IMAGINARY)
        for _ in range(steps):
            for layer in scheme.layers:
                eta += apply_layer(mpo, layer, d_max, renormalize=True)
    normalize(mpo)
    exceeded = bool(eta > eps / 10)
    if exceeded:
        logger.warning(f"Imaginary-time truncation error {eta:.3e} exceeds eps/10 = {eps / 10:.1e} "
                       f"(beta={beta}, d_max={d_max})")
    logger.info(f"Thermal state of {h0.label}, n={h0.n}, beta={beta}: {steps} steps of {dbeta:g}, "
                f"eta={eta:.3e}, max bond {mpo.max_bond}")
    return ThermalState(mpo=mpo, eta=eta, steps=steps, dbeta=dbeta, eta_exceeded=exceeded)
