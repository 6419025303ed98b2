"""
Dense double-precision kernels shared by the MPO engine, the spin model and the exact oracles.

Matrices are plain 2-D numpy arrays: complex128 in general, float64 for MPO tensor slices.
Every kernel is a pure function of its inputs.
"""
from typing import NamedTuple

import numpy as np
import scipy.linalg

from core.errors import ConvergenceError, PreconditionError
from logger_config import get_logger

logger = get_logger("Linalg")

HERMITIAN_RTOL = 1e-12


class SvdResult(NamedTuple):
    """
    Thin singular value decomposition m = u @ diag(singular_values) @ vdag.

    Attributes:
        u (np.ndarray): Left singular vectors as orthonormal columns.
        singular_values (np.ndarray): Nonnegative values in descending order.
        vdag (np.ndarray): Right singular vectors as orthonormal rows.
    """
    u: np.ndarray
    singular_values: np.ndarray
    vdag: np.ndarray


class EigResult(NamedTuple):
    """
    Hermitian eigendecomposition h = V @ diag(eigenvalues) @ V^dagger.

    Attributes:
        eigenvalues (np.ndarray): Real eigenvalues in ascending order.
        eigenvectors (np.ndarray): Orthonormal eigenvectors stored as columns.
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _require_matrix(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.size == 0:
        raise PreconditionError(f"{name} must be a nonempty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise PreconditionError(f"{name} of shape {m.shape} has non-finite entries")
    return m


def dense_matrix(entries, dtype=complex) -> np.ndarray:
    """
    Builds a validated, read-only dense matrix.

    Args:
        entries: Anything numpy can turn into a 2-D array.
        dtype: complex (default) or float for the real-entry variant.

    Returns:
        np.ndarray: A C-contiguous, non-writeable copy.

    Raises:
        PreconditionError: If the array is empty, not 2-D, or holds NaN/Inf.
    """
    m = _require_matrix(np.array(entries, dtype=dtype, order="C"))
    m.flags.writeable = False
    return m


def svd(m) -> SvdResult:
    """
    Full thin SVD with min(rows, cols) singular values.

    Uses the divide-and-conquer driver first and retries with the QR-iteration driver, both of
    which are deterministic for fixed input on one machine.

    Raises:
        PreconditionError: For empty or non-finite input.
        ConvergenceError: If neither LAPACK driver converges.
    """
    m = _require_matrix(m)
    for driver in ("gesdd", "gesvd"):
        try:
            u, s, vdag = scipy.linalg.svd(m, full_matrices=False, lapack_driver=driver, check_finite=False)
            return SvdResult(u, s, vdag)
        except np.linalg.LinAlgError:
            logger.warning(f"SVD driver {driver} did not converge for shape {m.shape}")
    raise ConvergenceError(f"SVD did not converge for a {m.shape[0]}x{m.shape[1]} matrix", m.shape)


def hermitian_asymmetry(h: np.ndarray) -> float:
    """Largest entry of |h - h^dagger|."""
    return float(np.max(np.abs(h - h.conj().T)))


def eigh(h) -> EigResult:
    """
    Eigendecomposition of a Hermitian matrix.

    Args:
        h: Square matrix, Hermitian within 1e-12 of its largest entry.

    Returns:
        EigResult: Ascending eigenvalues and orthonormal eigenvectors.

    Raises:
        PreconditionError: If h is not square or not Hermitian; the message names the
            largest asymmetry found.
    """
    h = _require_matrix(h, "hamiltonian")
    if h.shape[0] != h.shape[1]:
        raise PreconditionError(f"eigh needs a square matrix, got shape {h.shape}")
    scale = max(float(np.max(np.abs(h))), np.finfo(float).tiny)
    asymmetry = hermitian_asymmetry(h)
    if asymmetry > HERMITIAN_RTOL * scale:
        raise PreconditionError(f"Matrix is not Hermitian: max asymmetry {asymmetry:.3e} (scale {scale:.3e})")
    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(0.5 * (h + h.conj().T), check_finite=False)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"eigh did not converge: {e}", h.shape)
    return EigResult(eigenvalues, eigenvectors)


def expm_hermitian(h, z: complex) -> np.ndarray:
    """
    Computes exp(z * h) for Hermitian h through its eigendecomposition.

    Args:
        h: Hermitian matrix.
        z (complex): Scalar prefactor; purely imaginary z yields a unitary.

    Returns:
        np.ndarray: exp(z h); real when both h and z are real.
    """
    eigenvalues, eigenvectors = eigh(h)
    if np.isrealobj(eigenvectors) and np.imag(z) == 0:
        phases = np.exp(np.real(z) * eigenvalues)
    else:
        phases = np.exp(complex(z) * eigenvalues)
    return (eigenvectors * phases) @ eigenvectors.conj().T


def kron(a, b) -> np.ndarray:
    """Standard Kronecker product; dimensions multiply."""
    a = _require_matrix(a, "left factor")
    b = _require_matrix(b, "right factor")
    return np.kron(a, b)


def embed(op, first_site: int, n: int) -> np.ndarray:
    """
    Places a k-site operator on sites first_site .. first_site + k - 1 of an n-site chain.

    Site 0 is the leftmost (most significant) Kronecker factor.

    Args:
        op: A 2^k x 2^k matrix.
        first_site (int): Leftmost site the operator acts on.
        n (int): Chain length.

    Returns:
        np.ndarray: The 2^n x 2^n embedded operator.
    """
    op = _require_matrix(op, "operator")
    k = int(round(np.log2(op.shape[0])))
    if 2 ** k != op.shape[0] or op.shape[0] != op.shape[1]:
        raise PreconditionError(f"Operator of shape {op.shape} does not act on whole qubits")
    if first_site < 0 or first_site + k > n:
        raise PreconditionError(f"A {k}-site operator at site {first_site} does not fit in {n} sites")
    left = np.eye(2 ** first_site)
    right = np.eye(2 ** (n - first_site - k))
    return kron(kron(left, op), right)
