import numpy as np
import pytest

from core import linalg
from core.errors import PreconditionError
from core.pauli import SIGMA_X, SIGMA_Z, TWO_SITE_PAULIS
from core.spin_model import (GateKind, ModelParams, adjoint_gate, bond_terms, dense_from_bond_terms,
                             dense_hamiltonian, reflection_permutation, trotter_bond_unitaries, trotter_step)


@pytest.mark.parametrize("n", [2, 3, 6])
@pytest.mark.parametrize("hx,hz", [(0.0, 2.0), (1.0, 1.0), (-0.4, 0.3)])
def test_bond_terms_sum_to_hamiltonian(n, hx, hz):
    params = ModelParams(n, hx, hz)
    np.testing.assert_allclose(dense_from_bond_terms(bond_terms(params), n), dense_hamiltonian(params), atol=1e-12)


def test_dense_hamiltonian_on_two_sites():
    h = dense_hamiltonian(ModelParams(2, 0.5, 1.5))
    field = 0.5 * SIGMA_X + 1.5 * SIGMA_Z
    expected = np.kron(SIGMA_X, SIGMA_X) + np.kron(field, np.eye(2)) + np.kron(np.eye(2), field)
    np.testing.assert_allclose(h, expected.real, atol=1e-14)


def test_hamiltonian_is_reflection_symmetric():
    n = 7
    h = dense_hamiltonian(ModelParams.chaotic(n))
    perm = reflection_permutation(n)
    np.testing.assert_array_equal(h[np.ix_(perm, perm)], h)


def test_reflection_is_an_involution():
    perm = reflection_permutation(5)
    np.testing.assert_array_equal(perm[perm], np.arange(2 ** 5))
    assert perm[1] == 16


def test_presets_and_parse():
    assert ModelParams.regular(4) == ModelParams(4, 0.0, 2.0)
    assert ModelParams.chaotic(4) == ModelParams(4, 1.0, 1.0)
    assert ModelParams.parse(4, "chaotic") == ModelParams.chaotic(4)
    assert ModelParams.parse(4, " 0.5, -1 ") == ModelParams(4, 0.5, -1.0)
    assert ModelParams(4, 1.0, 1.0).label == "H(1,1)"


@pytest.mark.parametrize("text", ["", "1", "a,b", "1,2,3"])
def test_parse_rejects_malformed_fields(text):
    with pytest.raises(PreconditionError):
        ModelParams.parse(4, text)


def test_model_rejects_short_chain_and_nan_fields():
    with pytest.raises(PreconditionError):
        ModelParams(1, 0.0, 1.0)
    with pytest.raises(PreconditionError):
        ModelParams(4, float("nan"), 1.0)


def test_real_adjoint_gate_is_orthogonal_and_fixes_identity():
    u = linalg.expm_hermitian(bond_terms(ModelParams.chaotic(4))[1].h, -0.3j)
    r = adjoint_gate(u, GateKind.REAL).r
    assert np.isrealobj(r)
    np.testing.assert_allclose(r @ r.T, np.eye(16), atol=1e-12)
    np.testing.assert_allclose(r[:, 0], np.eye(16)[0], atol=1e-14)


def test_adjoint_gate_matches_heisenberg_conjugation():
    u = linalg.expm_hermitian(bond_terms(ModelParams(2, 0.3, 0.8))[0].h, -0.25j)
    gate = adjoint_gate(u, GateKind.REAL)
    # sigma^z on the left site has two-site Pauli index 3 * 4 + 0
    evolved = u.conj().T @ np.kron(SIGMA_Z, np.eye(2)) @ u
    coefficients = gate.r[:, 12]
    rebuilt = np.einsum("p,pij->ij", coefficients, TWO_SITE_PAULIS)
    np.testing.assert_allclose(rebuilt, evolved, atol=1e-12)


def test_real_gate_rejects_non_unitary():
    with pytest.raises(PreconditionError, match="not unitary"):
        adjoint_gate(2 * np.eye(4), GateKind.REAL)


def test_imaginary_gate_rejects_indefinite_matrix():
    with pytest.raises(PreconditionError, match="positive definite"):
        adjoint_gate(np.diag([1.0, 1.0, 1.0, -1.0]), GateKind.IMAGINARY)


def test_imaginary_gate_rejects_non_hermitian():
    k = np.eye(4, dtype=complex)
    k[0, 1] = 0.5
    with pytest.raises(PreconditionError, match="not Hermitian"):
        adjoint_gate(k, GateKind.IMAGINARY)


def test_imaginary_gate_on_identity_gives_boltzmann_factor():
    h = bond_terms(ModelParams(2, 0.0, 1.0))[0].h
    tau = 0.2
    k = linalg.expm_hermitian(h, -0.5 * tau)
    gate = adjoint_gate(k, GateKind.IMAGINARY)
    rebuilt = np.einsum("p,pij->ij", gate.r[:, 0], TWO_SITE_PAULIS)
    np.testing.assert_allclose(rebuilt, linalg.expm_hermitian(h, -tau), atol=1e-12)


@pytest.mark.parametrize("n", [2, 5, 8])
def test_trotter_layers_have_expected_parities(n):
    scheme = trotter_step(ModelParams.regular(n), 0.05)
    even, odd, last = scheme.layers
    assert even is last
    assert (even.parity, odd.parity) == ("even", "odd")
    assert [g.bond for g in even.gates] == list(range(0, n - 1, 2))
    assert [g.bond for g in odd.gates] == list(range(1, n - 1, 2))
    assert all(g.kind is GateKind.REAL for g in odd.gates)


def test_trotter_step_rejects_nonpositive_dt():
    with pytest.raises(PreconditionError):
        trotter_step(ModelParams.regular(4), 0.0)


def test_bond_unitaries_follow_layer_order():
    layers = trotter_bond_unitaries(ModelParams.chaotic(5), 0.1)
    assert [[bond for bond, _ in layer] for layer in layers] == [[0, 2], [1, 3], [0, 2]]
    for layer in layers:
        for _, u in layer:
            np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
