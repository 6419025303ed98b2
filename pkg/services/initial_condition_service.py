from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Optional, Tuple

from core.errors import PreconditionError
from core.mpo import Mpo, mpo_extensive, mpo_pauli_string
from core.pauli import letter_index
from core.spin_model import ModelParams
from logger_config import get_logger
from services.thermal_service import DEFAULT_THERMAL_EPS, thermal_prepare

logger = get_logger("InitialCondition")

DEFAULT_OPERATOR_EPS = 1e-4


class AbstractInitialCondition(ABC):
    """
    Abstract base class for the operator a run starts from.

    Implementations are small immutable descriptors; the MPO itself is only built once the
    chain length and bond-dimension cap are known.
    """
    default_eps: float = DEFAULT_OPERATOR_EPS

    @abstractmethod
    def build(self, n: int, d_max: int) -> Mpo:
        """
        Builds the initial MPO.

        Args:
            n (int): Chain length.
            d_max (int): Bond dimension cap of the run.
        """
        pass

    @abstractmethod
    def describe(self) -> str:
        """Returns a descriptor string that InitialConditionFactory parses back."""
        pass

    def build_with_report(self, n: int, d_max: int, eps: Optional[float] = None) -> Tuple[Mpo, Dict[str, Any]]:
        """Builds the MPO together with notes about its preparation; eps is the tolerance of the run."""
        return self.build(n, d_max), {}


@dataclass(frozen=True)
class PauliStringCondition(AbstractInitialCondition):
    """
    A single Pauli string.

    Either `letters` are placed on consecutive sites ending at n/2 ("y" is sigma^y_{n/2},
    "zz" is sigma^z_{n/2-1} sigma^z_{n/2}), or `sites` pins letters to explicit sites. Both
    empty means the identity.
    """
    letters: str = ""
    sites: Tuple[Tuple[int, str], ...] = ()

    def __post_init__(self):
        if self.letters and self.sites:
            raise PreconditionError("Give either anchored letters or explicit sites, not both")
        for letter in self.letters:
            letter_index(letter)
        for _, letter in self.sites:
            letter_index(letter)

    def placement(self, n: int) -> Dict[int, str]:
        if self.sites:
            return dict(self.sites)
        start = n // 2 - len(self.letters) + 1
        if start < 0:
            raise PreconditionError(f"Pattern {self.letters!r} does not fit left of site {n // 2} for n={n}")
        return {start + k: letter for k, letter in enumerate(self.letters)}

    def build(self, n: int, d_max: int) -> Mpo:
        return mpo_pauli_string(n, self.placement(n))

    def describe(self) -> str:
        if self.sites:
            return "sites:" + ",".join(f"{j}={letter}" for j, letter in self.sites)
        return f"local:{self.letters}" if self.letters else "identity"


@dataclass(frozen=True)
class ExtensiveCondition(AbstractInitialCondition):
    """
    Translation-invariant sum of 1- and 2-site Pauli patterns, sum_j sum_p c_p p_j.

    Attributes:
        terms (Tuple[Tuple[float, str], ...]): (coefficient, letters) pairs.
        label (Optional[str]): Descriptor to report instead of the term list.
    """
    terms: Tuple[Tuple[float, str], ...]
    label: Optional[str] = None

    def __post_init__(self):
        if not self.terms:
            raise PreconditionError("An extensive operator needs at least one term")
        for _, letters in self.terms:
            if len(letters) not in (1, 2):
                raise PreconditionError(f"Term {letters!r} must have 1 or 2 letters")
            for letter in letters:
                letter_index(letter)

    @classmethod
    def hamiltonian(cls, hx: float, hz: float) -> "ExtensiveCondition":
        """The operator H(hx, hz) itself."""
        terms = [(1.0, "xx")] + [(c, letter) for c, letter in ((hx, "x"), (hz, "z")) if c]
        return cls(tuple(terms), label=f"hamiltonian:{hx:g},{hz:g}")

    def build(self, n: int, d_max: int) -> Mpo:
        return mpo_extensive(n, self.terms)

    def describe(self) -> str:
        if self.label:
            return self.label
        parts = [letters if c == 1 else f"{c:g}*{letters}" for c, letters in self.terms]
        return "extensive:" + "+".join(parts)


@dataclass(frozen=True)
class ThermalCondition(AbstractInitialCondition):
    """
    Thermal operator exp(-beta H0) prepared in imaginary time with the run's own d_max.

    Attributes:
        beta (float): Inverse temperature.
        hx (float): H0 transverse field, 0 by default.
        hz (float): H0 longitudinal field, 1 by default.
        dbeta (Optional[float]): Imaginary-time step; automatic when None.
    """
    beta: float
    hx: float = 0.0
    hz: float = 1.0
    dbeta: Optional[float] = None
    default_eps: ClassVar[float] = DEFAULT_THERMAL_EPS

    def __post_init__(self):
        if self.beta < 0:
            raise PreconditionError(f"beta must be nonnegative, got {self.beta}")

    def build_with_report(self, n: int, d_max: int, eps: Optional[float] = None) -> Tuple[Mpo, Dict[str, Any]]:
        state = thermal_prepare(ModelParams(n, self.hx, self.hz), self.beta, self.dbeta, d_max,
                                eps=self.default_eps if eps is None else eps)
        return state.mpo, {"eta_imag": state.eta, "imag_steps": state.steps, "dbeta": state.dbeta,
                           "thermal_prep_eta_exceeded": state.eta_exceeded}

    def build(self, n: int, d_max: int) -> Mpo:
        return self.build_with_report(n, d_max)[0]

    def describe(self) -> str:
        text = f"thermal:beta={self.beta:g},hx={self.hx:g},hz={self.hz:g}"
        return text + (f",dbeta={self.dbeta:g}" if self.dbeta is not None else "")


def _parse_extensive(body: str) -> ExtensiveCondition:
    terms = []
    for part in body.split("+"):
        part = part.strip()
        if not part:
            raise PreconditionError(f"Empty term in extensive descriptor {body!r}")
        coef, _, letters = part.rpartition("*")
        try:
            terms.append((float(coef) if coef else 1.0, letters.strip().lower()))
        except ValueError:
            raise PreconditionError(f"Cannot read coefficient {coef!r} in {part!r}")
    return ExtensiveCondition(tuple(terms))


def _parse_sites(body: str) -> PauliStringCondition:
    sites = []
    for item in body.split(","):
        site, sep, letter = item.partition("=")
        if not sep:
            raise PreconditionError(f"Expected '<site>=<letter>', got {item!r}")
        try:
            sites.append((int(site), letter.strip().lower()))
        except ValueError:
            raise PreconditionError(f"Site index {site!r} is not an integer")
    return PauliStringCondition(sites=tuple(sorted(sites)))


def _parse_thermal(body: str) -> ThermalCondition:
    values: Dict[str, float] = {}
    for item in body.split(","):
        key, sep, value = item.partition("=")
        key = key.strip().lower()
        if not sep or key not in ("beta", "hx", "hz", "dbeta"):
            raise PreconditionError(f"Unknown thermal setting {item!r}; expected beta, hx, hz or dbeta")
        try:
            values[key] = float(value)
        except ValueError:
            raise PreconditionError(f"Thermal setting {key} must be a number, got {value!r}")
    if "beta" not in values:
        raise PreconditionError("Thermal descriptor needs beta=<value>")
    return ThermalCondition(**values)


class InitialConditionFactory:
    """
    Factory class for creating initial conditions from descriptor strings.
    """
    @staticmethod
    def get_initial_condition(descriptor: str) -> AbstractInitialCondition:
        """
        Parses a descriptor such as "local:y", "sites:3=x,4=z", "extensive:zz+yy",
        "hamiltonian:1,1", "thermal:beta=0.01" or "identity".

        Returns:
            AbstractInitialCondition: The matching descriptor object.

        Raises:
            PreconditionError: If the kind is not supported or its body is malformed.
        """
        kind, _, body = descriptor.strip().partition(":")
        kind = kind.lower()
        if kind == "identity":
            return PauliStringCondition()
        elif kind == "local":
            if not body:
                raise PreconditionError("local: needs at least one letter")
            return PauliStringCondition(letters=body.strip().lower())
        elif kind == "sites":
            return _parse_sites(body)
        elif kind == "extensive":
            return _parse_extensive(body)
        elif kind == "hamiltonian":
            try:
                hx, hz = (float(v) for v in body.split(","))
            except ValueError:
                raise PreconditionError(f"hamiltonian: expects '<hx>,<hz>', got {body!r}")
            return ExtensiveCondition.hamiltonian(hx, hz)
        elif kind == "thermal":
            return _parse_thermal(body)
        else:
            raise PreconditionError(f"Unsupported initial condition: {descriptor!r}")
