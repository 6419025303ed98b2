"""
Ising chain in a homogeneous tilted field,

    H(hx, hz) = sum_j sigma^x_j sigma^x_{j+1} + sum_j (hx sigma^x_j + hz sigma^z_j),

with open boundaries, its even/odd bond splitting and the 16x16 adjoint gates that act on the
Pauli coefficients of an operator.
"""
import enum
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from core import linalg
from core.errors import PreconditionError
from core.pauli import IDENTITY, SIGMA_X, SIGMA_Z, TWO_SITE_PAULIS
from logger_config import get_logger

logger = get_logger("SpinModel")

MAX_DENSE_HAMILTONIAN_SITES = 14


class GateKind(str, enum.Enum):
    REAL = "real"
    IMAGINARY = "imaginary"


@dataclass(frozen=True)
class ModelParams:
    """
    Parameters of H(hx, hz).

    Attributes:
        n (int): Number of sites, at least 2.
        hx (float): Transverse-plane field in units of the coupling.
        hz (float): Longitudinal field.
    """
    n: int
    hx: float
    hz: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise PreconditionError(f"n must be an integer >= 2, got {self.n}")
        if not (np.isfinite(self.hx) and np.isfinite(self.hz)):
            raise PreconditionError(f"Fields must be finite, got hx={self.hx}, hz={self.hz}")

    @classmethod
    def regular(cls, n: int) -> "ModelParams":
        """The integrable transverse-field case H(0, 2)."""
        return cls(n, 0.0, 2.0)

    @classmethod
    def chaotic(cls, n: int) -> "ModelParams":
        """The non-integrable tilted-field case H(1, 1)."""
        return cls(n, 1.0, 1.0)

    @classmethod
    def parse(cls, n: int, text: str) -> "ModelParams":
        """Reads "hx,hz" or one of the preset names "regular" / "chaotic"."""
        text = text.strip().lower()
        if text in ("regular", "r"):
            return cls.regular(n)
        if text in ("chaotic", "c"):
            return cls.chaotic(n)
        try:
            hx, hz = (float(v) for v in text.split(","))
        except ValueError:
            raise PreconditionError(f"Cannot read model fields from {text!r}; expected 'hx,hz'")
        return cls(n, hx, hz)

    @property
    def label(self) -> str:
        return f"H({self.hx:g},{self.hz:g})"


@dataclass(frozen=True)
class BondHamiltonian:
    """
    Local term h_j on the bond (j, j+1).

    Attributes:
        bond (int): Left site of the bond.
        h (np.ndarray): 4x4 Hermitian matrix.
    """
    bond: int
    h: np.ndarray


@dataclass(frozen=True)
class AdjointGate:
    """
    Superoperator O -> K^dagger O K on a bond, acting on two-site Pauli coefficients.

    Attributes:
        bond (Optional[int]): Left site of the bond the gate is meant for.
        r (np.ndarray): 16x16 real matrix, r[p, q] = 1/4 tr(sigma^p K^dagger sigma^q K).
        kind (GateKind): Real- or imaginary-time origin.
    """
    bond: Optional[int]
    r: np.ndarray
    kind: GateKind


@dataclass(frozen=True)
class GateLayer:
    """
    Mutually commuting gates on bonds of one parity.

    Attributes:
        parity (str): "even" for bonds (0,1), (2,3), ...; "odd" for (1,2), (3,4), ...
        gates (Tuple[AdjointGate, ...]): One gate per bond of that parity.
    """
    parity: str
    gates: Tuple[AdjointGate, ...]


@dataclass(frozen=True)
class TrotterScheme:
    """
    One symmetric second-order step: half even layer, full odd layer, half even layer.

    Attributes:
        layers (Tuple[GateLayer, GateLayer, GateLayer]): Layers in application order.
        dt (float): Step length in real or imaginary time.
        kind (GateKind): Real or imaginary time.
    """
    layers: Tuple[GateLayer, GateLayer, GateLayer]
    dt: float
    kind: GateKind


def _field_weights(bond: int, n: int) -> Tuple[float, float]:
    # interior sites share their field between both bonds; edge sites give it all to their one bond
    left = 1.0 if bond == 0 else 0.5
    right = 1.0 if bond + 1 == n - 1 else 0.5
    return left, right


def bond_terms(params: ModelParams) -> List[BondHamiltonian]:
    """
    Splits H(hx, hz) into bond terms that sum back to the full Hamiltonian.

    Args:
        params (ModelParams): Model parameters.

    Returns:
        List[BondHamiltonian]: h_j for j = 0 .. n-2.
    """
    field = params.hx * SIGMA_X + params.hz * SIGMA_Z
    coupling = np.kron(SIGMA_X, SIGMA_X)
    terms = []
    for j in range(params.n - 1):
        w_left, w_right = _field_weights(j, params.n)
        h = coupling + w_left * np.kron(field, IDENTITY) + w_right * np.kron(IDENTITY, field)
        terms.append(BondHamiltonian(bond=j, h=h))
    return terms


def adjoint_gate(k, kind: GateKind, bond: Optional[int] = None) -> AdjointGate:
    """
    Converts a 4x4 two-site operator into its action on Pauli coefficients.

    For kind REAL, k = U is unitary and the gate maps the coefficients of O to those of
    U^dagger O U. For kind IMAGINARY, k = K is Hermitian positive definite and the gate maps
    O to K O K.

    Args:
        k: 4x4 complex matrix.
        kind (GateKind): Real or imaginary time.
        bond (int, optional): Bond the gate is meant for.

    Returns:
        AdjointGate: The real 16x16 representation.

    Raises:
        PreconditionError: If k is not unitary (REAL) or not Hermitian positive definite
            (IMAGINARY), or if the result is not real.
    """
    k = np.asarray(k, dtype=complex)
    if k.shape != (4, 4):
        raise PreconditionError(f"Gate generator must be 4x4, got {k.shape}")
    kind = GateKind(kind)
    if kind is GateKind.REAL:
        deviation = float(np.max(np.abs(k.conj().T @ k - np.eye(4))))
        if deviation > 1e-10:
            raise PreconditionError(f"Real-time gate is not unitary: max |K^dagger K - I| = {deviation:.3e}")
    else:
        asymmetry = linalg.hermitian_asymmetry(k)
        if asymmetry > 1e-12 * max(1.0, float(np.max(np.abs(k)))):
            raise PreconditionError(f"Imaginary-time gate is not Hermitian: max asymmetry {asymmetry:.3e}")
        lowest = float(np.linalg.eigvalsh(0.5 * (k + k.conj().T))[0])
        if lowest <= 0:
            raise PreconditionError(f"Imaginary-time gate is not positive definite: lowest eigenvalue {lowest:.3e}")

    conjugated = np.einsum("ji,qjk,kl->qil", k.conj(), TWO_SITE_PAULIS, k)
    r = 0.25 * np.einsum("pij,qji->pq", TWO_SITE_PAULIS, conjugated)
    imag = float(np.max(np.abs(r.imag)))
    if imag > 1e-12:
        raise PreconditionError(f"Adjoint gate is not real: max imaginary part {imag:.3e}")
    return AdjointGate(bond=bond, r=np.ascontiguousarray(r.real), kind=kind)


def _bond_generator(h: np.ndarray, tau: float, kind: GateKind) -> np.ndarray:
    if kind is GateKind.REAL:
        return linalg.expm_hermitian(h, -1j * tau)
    return linalg.expm_hermitian(h, -0.5 * tau)


def trotter_step(params: ModelParams, dt: float, kind: GateKind = GateKind.REAL) -> TrotterScheme:
    """
    Builds U(dt) = exp(-i H_e dt/2) exp(-i H_o dt) exp(-i H_e dt/2) as three gate layers.

    Real-time gates come from U_j = exp(-i h_j tau). Imaginary-time gates come from
    K_j = exp(-h_j tau / 2), applied on both sides, so that the identity flows to exp(-beta H).
    tau is dt/2 on even layers and dt on the odd layer.

    Args:
        params (ModelParams): Model parameters.
        dt (float): Positive step.
        kind (GateKind): Real or imaginary time.

    Returns:
        TrotterScheme: Immutable scheme, shareable across runs.
    """
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    kind = GateKind(kind)
    terms = bond_terms(params)

    def layer(parity: str, tau: float) -> GateLayer:
        start = 0 if parity == "even" else 1
        gates = tuple(adjoint_gate(_bond_generator(terms[j].h, tau, kind), kind, bond=j)
                      for j in range(start, params.n - 1, 2))
        return GateLayer(parity=parity, gates=gates)

    half_even = layer("even", dt / 2)
    scheme = TrotterScheme(layers=(half_even, layer("odd", dt), half_even), dt=float(dt), kind=kind)
    logger.debug(f"Trotter scheme for {params.label}, n={params.n}, dt={dt}, kind={kind.value}")
    return scheme


def trotter_bond_unitaries(params: ModelParams, dt: float) -> List[List[Tuple[int, np.ndarray]]]:
    """The 4x4 unitaries of one real-time step, per layer, as (bond, U_j) pairs."""
    terms = bond_terms(params)
    layers = []
    for parity, tau in (("even", dt / 2), ("odd", dt), ("even", dt / 2)):
        start = 0 if parity == "even" else 1
        layers.append([(j, _bond_generator(terms[j].h, tau, GateKind.REAL)) for j in range(start, params.n - 1, 2)])
    return layers


def dense_hamiltonian(params: ModelParams) -> np.ndarray:
    """
    The 2^n x 2^n matrix of H(hx, hz) with open boundaries.

    The model has no sigma^y terms, so the matrix is real symmetric.

    Raises:
        PreconditionError: For n > 14.
    """
    n = params.n
    if n > MAX_DENSE_HAMILTONIAN_SITES:
        raise PreconditionError(f"Refusing to build a dense Hamiltonian for n={n} > {MAX_DENSE_HAMILTONIAN_SITES}")
    dim = 2 ** n
    idx = np.arange(dim)
    h = np.zeros((dim, dim))

    def bit(site: int) -> int:
        return 1 << (n - 1 - site)

    for j in range(n - 1):
        h[idx, idx ^ (bit(j) | bit(j + 1))] += 1.0
    for j in range(n):
        if params.hx:
            h[idx, idx ^ bit(j)] += params.hx
        if params.hz:
            h[idx, idx] += params.hz * (1 - 2 * ((idx >> (n - 1 - j)) & 1))
    return h


def dense_from_bond_terms(terms: List[BondHamiltonian], n: int) -> np.ndarray:
    """Sum of the bond terms embedded in the full chain."""
    dim = 2 ** n
    total = np.zeros((dim, dim), dtype=complex)
    for term in terms:
        total += linalg.embed(term.h, term.bond, n)
    return total


def reflection_permutation(n: int) -> np.ndarray:
    """Index map of the site-reversal j -> n-1-j on computational basis states."""
    idx = np.arange(2 ** n)
    reversed_idx = np.zeros_like(idx)
    for j in range(n):
        reversed_idx |= ((idx >> j) & 1) << (n - 1 - j)
    return reversed_idx
