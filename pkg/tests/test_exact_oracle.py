import numpy as np
import pytest
from scipy import integrate

from core import linalg
from core.errors import PreconditionError
from core.exact_oracle import (ExactEvolver, TrotterCircuit, evolve_exact, fidelity, lsd_compare, lsd_pipeline,
                               parity_sectors, poisson_cdf, poisson_pdf, spacing_histogram, unfold_spacings,
                               wigner_cdf, wigner_pdf)
from core.mpo import apply_layer, mpo_pauli_string, mpo_to_dense
from core.pauli import SIGMA_Y, SIGMA_Z
from core.spin_model import ModelParams, dense_hamiltonian, trotter_step


def test_evolver_is_identity_at_time_zero():
    h = dense_hamiltonian(ModelParams.chaotic(4))
    o0 = linalg.embed(SIGMA_Y, 1, 4)
    np.testing.assert_allclose(ExactEvolver(h).at(o0, 0.0), o0, atol=1e-12)


def test_evolver_conserves_the_hamiltonian():
    h = dense_hamiltonian(ModelParams.chaotic(5))
    np.testing.assert_allclose(ExactEvolver(h).at(h, 2.7), h, atol=1e-10)


def test_evolve_exact_matches_matrix_exponential():
    h = dense_hamiltonian(ModelParams(3, 0.4, 0.9))
    o0 = linalg.embed(SIGMA_Z, 0, 3)
    u = linalg.expm_hermitian(h, -1.3j)
    np.testing.assert_allclose(evolve_exact(o0, h, 1.3), u.conj().T @ o0 @ u, atol=1e-12)


def test_evolver_rejects_mismatched_operator():
    with pytest.raises(PreconditionError):
        ExactEvolver(dense_hamiltonian(ModelParams.chaotic(3))).at(np.eye(4), 1.0)


def test_fidelity_properties():
    a = linalg.embed(SIGMA_Y, 0, 3)
    b = linalg.embed(SIGMA_Z, 2, 3)
    assert fidelity(a, a) == pytest.approx(1.0)
    assert fidelity(a, -3 * a) == pytest.approx(1.0)
    assert fidelity(a, b) == pytest.approx(0.0)
    assert fidelity(a, a + b) == pytest.approx(0.5)


def test_fidelity_rejects_zero_and_mismatched_operators():
    with pytest.raises(PreconditionError):
        fidelity(np.zeros((4, 4)), np.eye(4))
    with pytest.raises(PreconditionError):
        fidelity(np.eye(4), np.eye(8))


def test_untruncated_mpo_matches_dense_trotter_circuit():
    params, dt, steps = ModelParams.chaotic(6), 0.1, 10
    mpo = mpo_pauli_string(6, {2: "y"})
    scheme = trotter_step(params, dt)
    eta = 0.0
    for _ in range(steps):
        for layer in scheme.layers:
            eta += apply_layer(mpo, layer, d_max=64)
    assert eta < 1e-20
    reference = TrotterCircuit(params, dt).evolve(linalg.embed(SIGMA_Y, 2, 6), steps)
    assert 1 - fidelity(mpo_to_dense(mpo), reference) < 1e-10


def test_trotter_error_is_second_order():
    params, t = ModelParams.chaotic(4), 1.0
    h = dense_hamiltonian(params)
    o0 = linalg.embed(SIGMA_Z, 1, 4)
    exact = evolve_exact(o0, h, t)

    def error(dt):
        steps = int(round(t / dt))
        return np.linalg.norm(TrotterCircuit(params, dt).evolve(o0, steps) - exact)

    ratio = error(0.1) / error(0.05)
    assert 3.5 < ratio < 4.5


def test_parity_sector_dimensions_and_spectrum():
    n = 8
    h = dense_hamiltonian(ModelParams.chaotic(n))
    data = parity_sectors(h, n)
    assert len(data.sector(1)) == 136
    assert len(data.sector(-1)) == 120
    np.testing.assert_allclose(data.eigenvalues, np.linalg.eigvalsh(h), atol=1e-10)
    assert data.window == (pytest.approx(data.eigenvalues[0]), pytest.approx(data.eigenvalues[-1]))


def test_parity_sectors_reject_symmetry_breaking_field():
    n = 5
    h = dense_hamiltonian(ModelParams.chaotic(n)) + 0.3 * linalg.embed(SIGMA_Z, 0, n).real
    with pytest.raises(PreconditionError, match="commutator norm"):
        parity_sectors(h, n)


def test_unfolding_needs_enough_levels():
    data = parity_sectors(dense_hamiltonian(ModelParams.chaotic(6)), 6)
    with pytest.raises(PreconditionError, match="need 100"):
        unfold_spacings(data)


def test_unfolding_rejects_empty_window():
    data = parity_sectors(dense_hamiltonian(ModelParams.chaotic(6)), 6)
    with pytest.raises(PreconditionError):
        unfold_spacings(data, window=(1.0, -1.0))


@pytest.mark.parametrize("pdf,cdf", [(poisson_pdf, poisson_cdf), (wigner_pdf, wigner_cdf)])
def test_reference_laws_are_normalized_with_unit_mean(pdf, cdf):
    total, _ = integrate.quad(lambda s: float(pdf(s)), 0, np.inf)
    mean, _ = integrate.quad(lambda s: s * float(pdf(s)), 0, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert mean == pytest.approx(1.0, abs=1e-8)
    assert float(cdf(1.5)) == pytest.approx(integrate.quad(lambda s: float(pdf(s)), 0, 1.5)[0], abs=1e-10)


def test_histogram_integrates_to_one():
    samples = np.random.default_rng(0).exponential(size=3000)
    hist = spacing_histogram(samples, bins=30)
    assert np.sum(hist.densities * np.diff(hist.edges)) == pytest.approx(1.0)
    assert hist.count == 3000
    assert hist.edges[-1] >= 4.0


def test_lsd_compare_recognizes_both_laws():
    rng = np.random.default_rng(1)
    poisson = rng.exponential(size=2000)
    wigner = np.sqrt(-4 / np.pi * np.log(1 - rng.random(2000)))
    assert lsd_compare(poisson).verdict == "poisson"
    report = lsd_compare(wigner)
    assert report.verdict == "wigner"
    assert report.ks_wigner < report.ks_poisson
    assert report.fraction_below_quarter < lsd_compare(poisson).fraction_below_quarter


@pytest.mark.slow
@pytest.mark.parametrize("params,verdict", [(ModelParams.chaotic(12), "wigner"), (ModelParams.regular(12), "poisson")])
def test_level_statistics_of_both_models(params, verdict):
    _, samples, report = lsd_pipeline(params)
    assert samples.mean() == pytest.approx(1.0)
    assert report.verdict == verdict
