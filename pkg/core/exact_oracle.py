"""
Dense references for small chains: exact and Trotterized Heisenberg evolution, the operator
fidelity, and the level-spacing pipeline (parity resolution, unfolding, comparison with the
Wigner surmise and the Poisson law).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy import stats

from core import linalg
from core.errors import PreconditionError
from core.spin_model import ModelParams, dense_hamiltonian, reflection_permutation, trotter_bond_unitaries
from logger_config import get_logger

logger = get_logger("Oracle")

DEFAULT_WINDOW = (-9.0, 9.0)
DEFAULT_UNFOLD_DEGREE = 9
MIN_SECTOR_LEVELS = 100
MIN_LSD_SAMPLES = 500


class ExactEvolver:
    """
    Heisenberg-picture evolution O(t) = e^{iHt} O e^{-iHt} from one cached diagonalization.
    """
    def __init__(self, h):
        self.eigenvalues, self.eigenvectors = linalg.eigh(h)

    def at(self, o0, t: float) -> np.ndarray:
        """
        Evolves o0 to time t.

        Args:
            o0: Operator with the same dimension as H.
            t (float): Time.

        Returns:
            np.ndarray: The evolved operator.
        """
        o0 = np.asarray(o0)
        if o0.shape != self.eigenvectors.shape:
            raise PreconditionError(f"Operator shape {o0.shape} does not match H {self.eigenvectors.shape}")
        v = self.eigenvectors
        in_eigenbasis = v.conj().T @ o0 @ v
        phases = np.exp(1j * t * (self.eigenvalues[:, None] - self.eigenvalues[None, :]))
        return v @ (in_eigenbasis * phases) @ v.conj().T


def evolve_exact(o0, h, t: float) -> np.ndarray:
    """One-shot e^{iHt} o0 e^{-iHt}; use ExactEvolver to reuse the diagonalization."""
    return ExactEvolver(h).at(o0, t)


def fidelity(a, b) -> float:
    """
    Normalized squared overlap |tr(a^dagger b)|^2 / (tr(a^dagger a) tr(b^dagger b)).

    Raises:
        PreconditionError: On shape mismatch or a zero operator.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise PreconditionError(f"Shape mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.vdot(a, a).real)
    norm_b = float(np.vdot(b, b).real)
    if norm_a == 0 or norm_b == 0:
        raise PreconditionError("Fidelity is undefined for a zero operator")
    overlap = np.vdot(a, b)
    return float(min(1.0, abs(overlap) ** 2 / (norm_a * norm_b)))


def dense_trotter_unitary(params: ModelParams, dt: float) -> np.ndarray:
    """Dense product U_e(dt/2) U_o(dt) U_e(dt/2) of the embedded bond unitaries."""
    dim = 2 ** params.n
    total = np.eye(dim, dtype=complex)
    for layer in trotter_bond_unitaries(params, dt):
        for bond, u in layer:
            total = total @ linalg.embed(u, bond, params.n)
    return total


class TrotterCircuit:
    """Dense Heisenberg-picture Trotter circuit, O -> U_step^dagger O U_step per step."""
    def __init__(self, params: ModelParams, dt: float):
        self.params = params
        self.dt = dt
        self.step_unitary = dense_trotter_unitary(params, dt)

    def evolve(self, o0, steps: int) -> np.ndarray:
        u = np.linalg.matrix_power(self.step_unitary, steps)
        return u.conj().T @ np.asarray(o0) @ u


@dataclass
class SpectralData:
    """
    Parity-resolved spectrum.

    Attributes:
        eigenvalues (np.ndarray): All eigenvalues, ascending.
        parity_labels (np.ndarray): +1 (reflection-symmetric) or -1 per eigenvalue.
        window (Tuple[float, float]): Spectral range [E_min, E_max].
    """
    eigenvalues: np.ndarray
    parity_labels: np.ndarray
    window: Tuple[float, float]

    def sector(self, label: int) -> np.ndarray:
        return self.eigenvalues[self.parity_labels == label]


@dataclass
class SpacingHistogram:
    """
    Binned unfolded spacings.

    Attributes:
        edges (np.ndarray): Uniform bin edges over [0, s_max].
        densities (np.ndarray): Normalized so that sum(densities * widths) = 1.
        count (int): Number of samples.
        mean_spacing (float): Sample mean; 1 after unfolding.
    """
    edges: np.ndarray
    densities: np.ndarray
    count: int
    mean_spacing: float


@dataclass
class LsdReport:
    ks_wigner: float
    ks_poisson: float
    verdict: str
    count: int
    fraction_below_quarter: float

    def to_dict(self) -> dict:
        return {
            "ks_wigner": self.ks_wigner,
            "ks_poisson": self.ks_poisson,
            "verdict": self.verdict,
            "count": self.count,
            "fraction_below_quarter": self.fraction_below_quarter,
        }


def _sector_blocks(h: np.ndarray, perm: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    idx = np.arange(len(perm))
    fixed = idx[perm == idx]
    lower = idx[idx < perm]
    partner = perm[lower]

    # symmetric basis: e_i for palindromes, (e_i + e_P(i)) / sqrt(2) for pairs
    sym_a = np.concatenate([fixed, lower])
    sym_b = np.concatenate([fixed, partner])
    sym_w = np.concatenate([np.full(len(fixed), 0.5), np.full(len(lower), 1 / np.sqrt(2))])
    h_cols = (h[:, sym_a] + h[:, sym_b]) * sym_w
    symmetric = (h_cols[sym_a, :] + h_cols[sym_b, :]) * sym_w[:, None]

    w = 1 / np.sqrt(2)
    a_cols = (h[:, lower] - h[:, partner]) * w
    antisymmetric = (a_cols[lower, :] - a_cols[partner, :]) * w
    return symmetric, antisymmetric


def parity_sectors(h, n: int) -> SpectralData:
    """
    Diagonalizes h separately in the reflection-symmetric and antisymmetric subspaces.

    Args:
        h: Dense 2^n x 2^n Hermitian matrix commuting with the site reversal.
        n (int): Number of sites.

    Returns:
        SpectralData: Combined spectrum with parity labels.

    Raises:
        PreconditionError: If h does not commute with the reflection; the message gives the
            commutator norm.
    """
    h = np.asarray(h)
    if h.shape != (2 ** n, 2 ** n):
        raise PreconditionError(f"Matrix shape {h.shape} does not match n={n}")
    perm = reflection_permutation(n)
    commutator = float(np.max(np.abs(h[np.ix_(perm, perm)] - h)))
    if commutator > 1e-10:
        raise PreconditionError(f"Hamiltonian breaks reflection symmetry: commutator norm {commutator:.3e}")

    symmetric, antisymmetric = _sector_blocks(h, perm)
    blocks = [b for b in (symmetric, antisymmetric) if b.size]
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        spectra = list(pool.map(lambda b: linalg.eigh(b).eigenvalues, blocks))
    labels = [np.full(len(spectra[0]), 1)]
    if len(spectra) > 1:
        labels.append(np.full(len(spectra[1]), -1))
    eigenvalues = np.concatenate(spectra)
    parity_labels = np.concatenate(labels)
    order = np.argsort(eigenvalues, kind="stable")
    logger.info(f"Parity sectors for n={n}: dims {symmetric.shape[0]} (+) and {antisymmetric.shape[0]} (-)")
    return SpectralData(eigenvalues[order], parity_labels[order], (float(eigenvalues.min()), float(eigenvalues.max())))


def unfold_spacings(data: SpectralData, window: Tuple[float, float] = DEFAULT_WINDOW,
                    degree: int = DEFAULT_UNFOLD_DEGREE) -> np.ndarray:
    """
    Unfolds each parity sector with a polynomial fit of its spectral staircase and pools the
    nearest-neighbour spacings.

    Args:
        data (SpectralData): Parity-resolved spectrum.
        window (Tuple[float, float]): Energy window of levels used.
        degree (int): Degree of the smooth staircase fit.

    Returns:
        np.ndarray: Pooled spacings rescaled to mean 1.

    Raises:
        PreconditionError: If a sector has fewer than 100 levels in the window.
    """
    lo, hi = window
    if not lo < hi:
        raise PreconditionError(f"Empty window {window}")
    pooled = []
    for label in (1, -1):
        levels = np.sort(data.sector(label))
        levels = levels[(levels >= lo) & (levels <= hi)]
        if len(levels) < MIN_SECTOR_LEVELS:
            raise PreconditionError(f"Parity sector {label:+d} has {len(levels)} levels in {window}, need {MIN_SECTOR_LEVELS}")
        staircase = np.arange(len(levels), dtype=float)
        smooth = Polynomial.fit(levels, staircase, deg=min(degree, len(levels) - 2))
        pooled.append(np.diff(smooth(levels)))
    spacings = np.concatenate(pooled)
    return spacings / spacings.mean()


def poisson_pdf(s):
    return np.exp(-np.asarray(s, dtype=float))


def poisson_cdf(s):
    return 1.0 - np.exp(-np.asarray(s, dtype=float))


def wigner_pdf(s):
    s = np.asarray(s, dtype=float)
    return 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s ** 2)


def wigner_cdf(s):
    return 1.0 - np.exp(-0.25 * np.pi * np.asarray(s, dtype=float) ** 2)


def spacing_histogram(samples, bins: int = 40, s_max: float = 4.0) -> SpacingHistogram:
    """Density histogram on [0, max(s_max, largest sample)]."""
    samples = np.asarray(samples, dtype=float)
    upper = max(s_max, float(samples.max()))
    densities, edges = np.histogram(samples, bins=bins, range=(0.0, upper), density=True)
    return SpacingHistogram(edges, densities, len(samples), float(samples.mean()))


def lsd_compare(samples) -> LsdReport:
    """
    Kolmogorov-Smirnov distances of the spacing distribution to both reference laws.

    Returns:
        LsdReport: Verdict "wigner" or "poisson", whichever is nearer.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < MIN_LSD_SAMPLES:
        logger.warning(f"Only {len(samples)} spacings; KS verdicts below {MIN_LSD_SAMPLES} samples are unreliable")
    ks_wigner = float(stats.kstest(samples, wigner_cdf).statistic)
    ks_poisson = float(stats.kstest(samples, poisson_cdf).statistic)
    verdict = "wigner" if ks_wigner < ks_poisson else "poisson"
    return LsdReport(ks_wigner, ks_poisson, verdict, len(samples), float(np.mean(samples < 0.25)))


def lsd_pipeline(params: ModelParams, window: Tuple[float, float] = DEFAULT_WINDOW,
                 degree: int = DEFAULT_UNFOLD_DEGREE) -> Tuple[SpectralData, np.ndarray, LsdReport]:
    """Dense Hamiltonian -> parity sectors -> unfolded spacings -> KS comparison."""
    data = parity_sectors(dense_hamiltonian(params), params.n)
    samples = unfold_spacings(data, window, degree)
    report = lsd_compare(samples)
    logger.info(f"LSD for {params.label}, n={params.n}: {report.verdict} "
                f"(KS wigner {report.ks_wigner:.3f}, poisson {report.ks_poisson:.3f})")
    return data, samples, report
