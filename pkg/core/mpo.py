"""
Matrix product operators in the Pauli superket basis.

An operator O on n qubits is stored through its Pauli coefficients

    O = sum_s c_{s_0 ... s_{n-1}} sigma^{s_0} x ... x sigma^{s_{n-1}},
    c_s = exp(log_norm) * T_0[0, s_0, :] T_1[:, s_1, :] ... T_{n-1}[:, s_{n-1}, 0]

with real rank-3 tensors T_j[left, s, right] and open boundaries (D_0 = D_n = 1). Under the
inner product <A|B> = 2^-n tr(A^dagger B) Pauli strings are orthonormal, so the canonical forms
and truncation rules of ordinary matrix product states apply unchanged.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import h5py
import numpy as np

from core import linalg
from core.errors import PreconditionError, SizeLimitError
from core.pauli import PAULI_MATRICES, letter_index
from logger_config import get_logger

logger = get_logger("Mpo")

# squared, normalized Schmidt weights at or below this are always discarded
ZERO_WEIGHT_CUTOFF = 1e-28
MAX_DENSE_SITES = 12

Pattern = Union[str, Mapping[int, str]]


class Mpo:
    """
    A chain of real rank-3 tensors T_j[left bond, Pauli letter, right bond].

    Attributes:
        tensors (List[np.ndarray]): Site tensors, float64, shape (D_j, 4, D_{j+1}).
        center (Optional[int]): Orthogonality center, or None when no gauge is known.
        log_norm (float): Accumulated log of a global scale factor.
    """
    def __init__(self, tensors: Sequence[np.ndarray], center: Optional[int] = None, log_norm: float = 0.0):
        if len(tensors) < 2:
            raise PreconditionError(f"An MPO needs at least 2 sites, got {len(tensors)}")
        checked = []
        for j, t in enumerate(tensors):
            t = np.asarray(t)
            if np.iscomplexobj(t):
                raise PreconditionError(f"Tensor {j} is complex; MPO tensors are real")
            t = np.ascontiguousarray(t, dtype=float)
            if t.ndim != 3 or t.shape[1] != 4:
                raise PreconditionError(f"Tensor {j} has shape {t.shape}, expected (Dl, 4, Dr)")
            if not np.all(np.isfinite(t)):
                raise PreconditionError(f"Tensor {j} has non-finite entries")
            if checked and checked[-1].shape[2] != t.shape[0]:
                raise PreconditionError(f"Bond mismatch between sites {j - 1} and {j}")
            checked.append(t)
        if checked[0].shape[0] != 1 or checked[-1].shape[2] != 1:
            raise PreconditionError("Boundary bond dimensions must be 1")
        if center is not None and not 0 <= center < len(checked):
            raise PreconditionError(f"Center {center} outside 0..{len(checked) - 1}")
        self.tensors: List[np.ndarray] = checked
        self.center: Optional[int] = center
        self.log_norm: float = float(log_norm)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> List[int]:
        """Bond dimensions D_0 .. D_n, boundaries included."""
        return [t.shape[0] for t in self.tensors] + [1]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims)

    def copy(self) -> "Mpo":
        return Mpo([t.copy() for t in self.tensors], self.center, self.log_norm)

    def scaled(self, factor: float) -> "Mpo":
        """Returns a copy representing factor * O; a negative factor flips the first tensor."""
        result = self.copy()
        if factor == 0:
            raise PreconditionError("Cannot scale an MPO by zero")
        result.log_norm += float(np.log(abs(factor)))
        if factor < 0:
            result.tensors[0] = -result.tensors[0]
        return result

    def __repr__(self):
        return f"Mpo(n={self.n}, bond_dims={self.bond_dims}, center={self.center}, log_norm={self.log_norm:.6g})"


@dataclass
class TruncationReport:
    """
    Outcome of one two-site gate application.

    Attributes:
        bond (int): Left site j of the bond (j, j+1).
        eta (float): Sum of the discarded normalized weights lambda^2.
        kept (int): Retained bond dimension.
        discarded_weight_spectrum (np.ndarray): The normalized lambda^2 values that were cut.
    """
    bond: int
    eta: float
    kept: int
    discarded_weight_spectrum: np.ndarray = field(repr=False)


def _site_tensor(letter_idx: int) -> np.ndarray:
    t = np.zeros((1, 4, 1))
    t[0, letter_idx, 0] = 1.0
    return t


def mpo_identity(n: int) -> Mpo:
    """
    The identity operator on n sites as a bond-dimension-1 MPO.

    Raises:
        PreconditionError: If n < 2.
    """
    if n < 2:
        raise PreconditionError(f"Chain length must be at least 2, got {n}")
    return Mpo([_site_tensor(0) for _ in range(n)], center=0)


def mpo_pauli_string(n: int, letters: Mapping[int, str]) -> Mpo:
    """
    A product of Pauli matrices, identity on unlisted sites.

    Args:
        n (int): Chain length.
        letters (Mapping[int, str]): Site -> 'x' | 'y' | 'z'. May be empty.

    Returns:
        Mpo: Bond dimension 1 representation.

    Raises:
        PreconditionError: If a site is out of range or a letter is unknown.
    """
    if n < 2:
        raise PreconditionError(f"Chain length must be at least 2, got {n}")
    idx = [0] * n
    for site, letter in letters.items():
        if not 0 <= site < n:
            raise PreconditionError(f"Site {site} is outside the chain 0..{n - 1}")
        idx[site] = letter_index(letter)
    return Mpo([_site_tensor(i) for i in idx], center=0)


def _normalize_pattern(pattern: Pattern) -> Tuple[int, ...]:
    if isinstance(pattern, str):
        offsets = {k: letter for k, letter in enumerate(pattern)}
    else:
        offsets = dict(pattern)
    if not offsets:
        raise PreconditionError("Empty pattern")
    shift = min(offsets)
    offsets = {k - shift: v for k, v in offsets.items()}
    if sorted(offsets) not in ([0], [0, 1]):
        raise PreconditionError(f"Pattern {pattern!r} is not a 1-site or adjacent 2-site pattern")
    return tuple(letter_index(offsets[k]) for k in sorted(offsets))


def mpo_extensive(n: int, patterns: Iterable[Tuple[float, Pattern]]) -> Mpo:
    """
    Translational sum of 1- and 2-site Pauli patterns, sum_j sum_p coeff_p * (p placed at j).

    Uses the finite-state-automaton construction: state 0 means "nothing placed yet", the last
    state means "pattern completed", and one intermediate state per 2-site pattern carries a
    pattern whose first letter has been placed.

    Args:
        n (int): Chain length.
        patterns: Pairs (coefficient, pattern). A pattern is a string of 1 or 2 letters
            ("x", "xx", "zy") or a mapping offset -> letter on adjacent offsets.

    Returns:
        Mpo: Bond dimension 2 + (number of 2-site patterns).

    Raises:
        PreconditionError: For non-adjacent or malformed patterns.
    """
    if n < 2:
        raise PreconditionError(f"Chain length must be at least 2, got {n}")
    parsed = [(float(c), _normalize_pattern(p)) for c, p in patterns]
    pairs = [(c, p) for c, p in parsed if len(p) == 2]
    dim = 2 + len(pairs)
    final = dim - 1

    w = np.zeros((dim, 4, dim))
    w[0, 0, 0] = 1.0
    w[final, 0, final] = 1.0
    for c, p in parsed:
        if len(p) == 1:
            w[0, p[0], final] += c
    for k, (c, p) in enumerate(pairs, start=1):
        w[0, p[0], k] = c
        w[k, p[1], final] = 1.0

    tensors = [w.copy() for _ in range(n)]
    tensors[0] = w[0:1].copy()
    tensors[-1] = w[:, :, final:].copy()
    return Mpo(tensors)


def mpo_random(n: int, d: int, rng: np.random.Generator) -> Mpo:
    """Random real MPO with bond dimensions min(d, 4^j, 4^(n-j))."""
    dims = [min(d, 4 ** j, 4 ** (n - j)) for j in range(n + 1)]
    return Mpo([rng.standard_normal((dims[j], 4, dims[j + 1])) for j in range(n)])


def _qr_positive(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # fixing the sign of diag(R) makes the factorization unique, so re-gauging is idempotent
    q, r = np.linalg.qr(m)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, signs[:, None] * r


def _left_orthonormalize(mpo: Mpo, j: int):
    t = mpo.tensors[j]
    dl, _, dr = t.shape
    q, r = _qr_positive(t.reshape(dl * 4, dr))
    mpo.tensors[j] = q.reshape(dl, 4, q.shape[1])
    mpo.tensors[j + 1] = np.tensordot(r, mpo.tensors[j + 1], axes=(1, 0))


def _right_orthonormalize(mpo: Mpo, j: int):
    t = mpo.tensors[j]
    dl, _, dr = t.shape
    q, r = _qr_positive(t.reshape(dl, 4 * dr).T)
    mpo.tensors[j] = q.T.reshape(q.shape[1], 4, dr)
    mpo.tensors[j - 1] = np.tensordot(mpo.tensors[j - 1], r.T, axes=(2, 0))


def canonicalize(mpo: Mpo, center: int) -> Mpo:
    """
    Brings the MPO into mixed canonical form around a site, in place.

    Tensors left of the center become left-orthonormal and tensors right of it
    right-orthonormal. The represented operator does not change.

    Returns:
        Mpo: The same object, for chaining.
    """
    if not 0 <= center < mpo.n:
        raise PreconditionError(f"Center {center} outside 0..{mpo.n - 1}")
    for j in range(center):
        _left_orthonormalize(mpo, j)
    for j in range(mpo.n - 1, center, -1):
        _right_orthonormalize(mpo, j)
    mpo.center = center
    return mpo


def move_center(mpo: Mpo, center: int) -> Mpo:
    """Shifts a known orthogonality center with the fewest QR steps; canonicalizes otherwise."""
    if mpo.center is None:
        return canonicalize(mpo, center)
    for j in range(mpo.center, center):
        _left_orthonormalize(mpo, j)
    for j in range(mpo.center, center, -1):
        _right_orthonormalize(mpo, j)
    mpo.center = center
    return mpo


def is_left_orthonormal(t: np.ndarray, tol: float = 1e-10) -> bool:
    m = t.reshape(-1, t.shape[2])
    return bool(np.allclose(m.T @ m, np.eye(t.shape[2]), atol=tol))


def is_right_orthonormal(t: np.ndarray, tol: float = 1e-10) -> bool:
    m = t.reshape(t.shape[0], -1)
    return bool(np.allclose(m @ m.T, np.eye(t.shape[0]), atol=tol))


def apply_gate(mpo: Mpo, bond: int, gate, d_max: int, renormalize: bool = False, direction: str = "right") -> TruncationReport:
    """
    Applies a 16x16 adjoint gate to sites (bond, bond+1) and truncates by SVD.

    The orthogonality center is first moved onto the bond, so the local truncation is globally
    optimal. The squared singular values are normalized to sum 1; at most d_max of them are
    kept and the discarded weight is reported as eta.

    Args:
        mpo (Mpo): Operator, modified in place.
        bond (int): Left site of the bond.
        gate: An AdjointGate, or any object with a 16x16 real matrix in `.r`, or the matrix itself.
        d_max (int): Maximum retained bond dimension.
        renormalize (bool): Rescale the retained spectrum to unit norm and move the factor into
            log_norm. Off for real time, where the norm shrinks by sqrt(1 - eta).
        direction (str): "right" leaves the center on bond + 1, "left" on bond.

    Returns:
        TruncationReport: Per-gate truncation record.

    Raises:
        PreconditionError: If d_max < 1, the bond is out of range or the gate is malformed.
    """
    if d_max < 1:
        raise PreconditionError(f"d_max must be at least 1, got {d_max}")
    if not 0 <= bond < mpo.n - 1:
        raise PreconditionError(f"Bond {bond} outside 0..{mpo.n - 2}")
    if direction not in ("right", "left"):
        raise PreconditionError(f"Unknown sweep direction {direction!r}")
    r = np.asarray(getattr(gate, "r", gate))
    if r.shape != (16, 16) or np.iscomplexobj(r):
        raise PreconditionError(f"Gate must be a real 16x16 matrix, got {r.dtype} {r.shape}")

    if mpo.center not in (bond, bond + 1):
        target = bond + 1 if mpo.center is not None and mpo.center > bond + 1 else bond
        move_center(mpo, target)

    a, b = mpo.tensors[bond], mpo.tensors[bond + 1]
    dl, dr = a.shape[0], b.shape[2]
    theta = np.tensordot(a, b, axes=(2, 0)).reshape(dl, 16, dr)
    theta = np.tensordot(r, theta, axes=(1, 1)).transpose(1, 0, 2)
    u, s, vdag = linalg.svd(theta.reshape(dl * 4, 4 * dr))

    weights = s ** 2
    total = float(weights.sum())
    if total > 0:
        lam2 = weights / total
        keep = max(1, min(d_max, int(np.count_nonzero(lam2 > ZERO_WEIGHT_CUTOFF))))
    else:
        lam2 = weights
        keep = 1
    discarded = lam2[keep:].copy()
    eta = float(discarded.sum())

    u, s, vdag = u[:, :keep], s[:keep], vdag[:keep]
    if renormalize:
        kept_norm = float(np.sqrt(np.sum(s ** 2)))
        if kept_norm > 0:
            s = s / kept_norm
            mpo.log_norm += float(np.log(kept_norm))

    if direction == "right":
        left, right = u, s[:, None] * vdag
        mpo.center = bond + 1
    else:
        left, right = u * s, vdag
        mpo.center = bond
    mpo.tensors[bond] = np.ascontiguousarray(left.reshape(dl, 4, keep))
    mpo.tensors[bond + 1] = np.ascontiguousarray(right.reshape(keep, 4, dr))
    return TruncationReport(bond=bond, eta=eta, kept=keep, discarded_weight_spectrum=discarded)


def apply_layer(mpo: Mpo, layer, d_max: int, renormalize: bool = False) -> float:
    """
    Applies one layer of mutually commuting gates in a single sweep.

    Odd layers sweep left to right and even layers right to left, so the orthogonality center
    travels with the active bond.

    Args:
        mpo (Mpo): Operator, modified in place.
        layer: A GateLayer (gates with `.bond`, and `.parity` in {"even", "odd"}).
        d_max (int): Maximum retained bond dimension.
        renormalize (bool): Passed through to apply_gate.

    Returns:
        float: Sum of eta over the layer.
    """
    direction = "right" if layer.parity == "odd" else "left"
    gates = sorted(layer.gates, key=lambda g: g.bond, reverse=(direction == "left"))
    eta = 0.0
    for gate in gates:
        eta += apply_gate(mpo, gate.bond, gate, d_max, renormalize=renormalize, direction=direction).eta
    return eta


def hs_inner(a: Mpo, b: Mpo) -> float:
    """
    Normalized Hilbert-Schmidt product 2^-n tr(a^dagger b), contracted exactly site by site.

    Raises:
        PreconditionError: If the chains have different lengths.
    """
    if a.n != b.n:
        raise PreconditionError(f"Size mismatch: {a.n} vs {b.n} sites")
    env = np.ones((1, 1))
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.tensordot(np.tensordot(env, ta, axes=(0, 0)), tb, axes=([0, 1], [0, 1]))
    return float(env[0, 0]) * float(np.exp(a.log_norm + b.log_norm))


def hs_norm(mpo: Mpo) -> float:
    return float(np.sqrt(max(hs_inner(mpo, mpo), 0.0)))


def pauli_weight(mpo: Mpo, letters: Mapping[int, str]) -> float:
    """Coefficient of one Pauli string in the expansion of the operator."""
    return hs_inner(mpo_pauli_string(mpo.n, letters), mpo)


def normalize(mpo: Mpo) -> Mpo:
    """Rescales in place to unit Hilbert-Schmidt norm with log_norm = 0."""
    if mpo.center is None:
        canonicalize(mpo, 0)
    c = mpo.center
    norm = float(np.linalg.norm(mpo.tensors[c]))
    if norm == 0:
        raise PreconditionError("Cannot normalize the zero operator")
    mpo.tensors[c] = mpo.tensors[c] / norm
    mpo.log_norm = 0.0
    return mpo


def _dense_block(tensors: Sequence[np.ndarray]) -> np.ndarray:
    # (Dl, Dr, 2^k, 2^k) operator-valued matrix of a run of sites
    block = None
    for t in tensors:
        local = np.einsum("asb,sij->abij", t, PAULI_MATRICES)
        if block is None:
            block = local
        else:
            dl, dim = block.shape[0], block.shape[2]
            block = np.einsum("abIJ,bcij->acIiJj", block, local).reshape(dl, local.shape[1], dim * 2, dim * 2)
    return block


def mpo_to_dense(mpo: Mpo) -> np.ndarray:
    """
    Expands the MPO into a 2^n x 2^n matrix.

    Raises:
        SizeLimitError: For n > 12, with the memory the dense matrix would need.
    """
    if mpo.n > MAX_DENSE_SITES:
        required = 16 * 4 ** mpo.n
        raise SizeLimitError(f"Refusing to densify {mpo.n} sites: needs {required / 2 ** 30:.1f} GiB", required)
    half = mpo.n // 2
    left = _dense_block(mpo.tensors[:half])[0]
    right = _dense_block(mpo.tensors[half:])[:, 0]
    dim = 2 ** mpo.n
    dense = np.einsum("bIJ,bij->IiJj", left, right).reshape(dim, dim)
    return dense * np.exp(mpo.log_norm)


def pauli_coefficients(op) -> np.ndarray:
    """
    Coefficient tensor c[s_0, ..., s_{n-1}] = 2^-n tr(sigma^s op) of a 2^n x 2^n matrix.
    """
    op = np.asarray(op)
    dim = op.shape[0]
    n = int(round(np.log2(dim)))
    if op.shape != (2 ** n, 2 ** n) or n < 1:
        raise PreconditionError(f"Operator of shape {op.shape} is not a qubit operator")
    if n > MAX_DENSE_SITES:
        raise SizeLimitError(f"Refusing to expand {n} sites", 16 * 4 ** n)
    # interleave row and column bits site by site: (i_0, j_0, i_1, j_1, ...)
    order = [k for pair in zip(range(n), range(n, 2 * n)) for k in pair]
    coeffs = op.reshape([2] * (2 * n)).transpose(order).reshape([4] * n)
    # c_s = 1/2 sum_ij sigma^s[j, i] O[i, j] on each site
    site_map = 0.5 * PAULI_MATRICES.transpose(0, 2, 1).reshape(4, 4)
    for _ in range(n):
        coeffs = np.tensordot(coeffs, site_map, axes=(0, 1))
    return coeffs


def mpo_from_dense(op, d_max: Optional[int] = None) -> Mpo:
    """
    Exact (or d_max-truncated) MPO of a Hermitian dense operator by successive SVDs.

    Returns:
        Mpo: Left-canonical MPO with the center on the last site.

    Raises:
        PreconditionError: If op is not Hermitian (its Pauli coefficients would be complex).
    """
    coeffs = pauli_coefficients(op)
    scale = max(float(np.max(np.abs(coeffs))), np.finfo(float).tiny)
    if float(np.max(np.abs(coeffs.imag))) > 1e-12 * scale:
        raise PreconditionError("Operator is not Hermitian; its MPO would not be real")
    coeffs = np.ascontiguousarray(coeffs.real)
    n = coeffs.ndim
    tensors = []
    dl = 1
    rest = coeffs.reshape(1, -1)
    for _ in range(n - 1):
        u, s, vdag = linalg.svd(rest.reshape(dl * 4, -1))
        weights = s ** 2
        total = weights.sum()
        keep = max(1, int(np.count_nonzero(weights > ZERO_WEIGHT_CUTOFF * total))) if total > 0 else 1
        if d_max is not None:
            keep = min(keep, d_max)
        tensors.append(u[:, :keep].reshape(dl, 4, keep))
        rest = s[:keep, None] * vdag[:keep]
        dl = keep
    tensors.append(rest.reshape(dl, 4, 1))
    return Mpo(tensors, center=n - 1)


def save_snapshot(mpo: Mpo, path: str, extra: Optional[Dict[str, object]] = None):
    """
    Writes an HDF5 checkpoint of the MPO; the round trip is bit-exact.

    Args:
        mpo (Mpo): Operator to store.
        path (str): Target file.
        extra (Dict[str, object], optional): Arrays are stored as datasets, scalars and
            strings as attributes of the "extra" group.
    """
    with h5py.File(path, "w") as f:
        f.attrs["n"] = mpo.n
        f.attrs["log_norm"] = mpo.log_norm
        f.attrs["center"] = -1 if mpo.center is None else mpo.center
        f.attrs["bond_dims"] = np.asarray(mpo.bond_dims)
        group = f.create_group("tensors")
        for j, t in enumerate(mpo.tensors):
            group.create_dataset(str(j), data=t)
        extras = f.create_group("extra")
        for key, value in (extra or {}).items():
            if isinstance(value, np.ndarray):
                extras.create_dataset(key, data=value)
            else:
                extras.attrs[key] = value
    logger.debug(f"Snapshot written to {path}: {mpo}")


def load_snapshot(path: str) -> Tuple[Mpo, Dict[str, object]]:
    """Reads a checkpoint written by save_snapshot; returns the MPO and its extras."""
    with h5py.File(path, "r") as f:
        n = int(f.attrs["n"])
        tensors = [f["tensors"][str(j)][()] for j in range(n)]
        center = int(f.attrs["center"])
        mpo = Mpo(tensors, center=None if center < 0 else center, log_norm=float(f.attrs["log_norm"]))
        extra: Dict[str, object] = {key: f["extra"][key][()] for key in f["extra"]}
        for key, value in f["extra"].attrs.items():
            extra[key] = value.item() if isinstance(value, np.generic) else value
    return mpo, extra
