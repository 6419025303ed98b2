import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core import linalg
from core.errors import PreconditionError, SizeLimitError
from core.mpo import (Mpo, apply_gate, apply_layer, canonicalize, hs_inner, hs_norm, is_left_orthonormal,
                      is_right_orthonormal, load_snapshot, move_center, mpo_extensive, mpo_from_dense,
                      mpo_identity, mpo_pauli_string, mpo_random, mpo_to_dense, normalize, pauli_weight,
                      save_snapshot)
from core.pauli import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z
from core.spin_model import GateKind, ModelParams, adjoint_gate, dense_hamiltonian, trotter_step


def random_unitary_gate(rng, tau=0.7):
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    return adjoint_gate(linalg.expm_hermitian(a + a.conj().T, -1j * tau), GateKind.REAL)


def test_identity_has_unit_norm_and_bond_one():
    mpo = mpo_identity(6)
    assert mpo.bond_dims == [1] * 7
    assert hs_inner(mpo, mpo) == pytest.approx(1.0)
    assert pauli_weight(mpo, {}) == pytest.approx(1.0)


def test_pauli_strings_are_orthonormal():
    x = mpo_pauli_string(5, {2: "x"})
    z = mpo_pauli_string(5, {2: "z"})
    assert hs_inner(x, x) == pytest.approx(1.0)
    assert hs_inner(x, z) == pytest.approx(0.0)


def test_pauli_string_densifies_to_embedded_matrix():
    mpo = mpo_pauli_string(4, {1: "y", 2: "z"})
    expected = linalg.embed(np.kron(SIGMA_Y, SIGMA_Z), 1, 4)
    np.testing.assert_allclose(mpo_to_dense(mpo), expected, atol=1e-14)


def test_pauli_string_rejects_sites_outside_chain():
    with pytest.raises(PreconditionError):
        mpo_pauli_string(4, {4: "x"})


def test_extensive_hamiltonian_matches_dense_hamiltonian():
    params = ModelParams(5, 0.7, -1.3)
    mpo = mpo_extensive(5, [(1.0, "xx"), (0.7, "x"), (-1.3, "z")])
    assert mpo.max_bond == 3
    np.testing.assert_allclose(mpo_to_dense(mpo).real, dense_hamiltonian(params), atol=1e-12)


def test_extensive_accepts_offset_patterns():
    n = 4
    mpo = mpo_extensive(n, [(2.0, {0: "z", 1: "y"})])
    expected = sum(linalg.embed(np.kron(SIGMA_Z, SIGMA_Y), j, n) for j in range(n - 1))
    np.testing.assert_allclose(mpo_to_dense(mpo), 2 * expected, atol=1e-12)


def test_extensive_rejects_non_adjacent_pattern():
    with pytest.raises(PreconditionError):
        mpo_extensive(5, [(1.0, {0: "x", 2: "x"})])


def test_from_dense_round_trip():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    op = a + a.conj().T
    mpo = mpo_from_dense(op)
    assert mpo.center == 3
    np.testing.assert_allclose(mpo_to_dense(mpo), op, atol=1e-10)


def test_from_dense_rejects_non_hermitian_operator():
    raising = np.array([[0, 1], [0, 0]], dtype=complex)
    with pytest.raises(PreconditionError):
        mpo_from_dense(np.kron(raising, IDENTITY))


def test_densify_refuses_large_chains():
    with pytest.raises(SizeLimitError) as info:
        mpo_to_dense(mpo_identity(13))
    assert info.value.required_bytes == 16 * 4 ** 13


def test_mpo_rejects_complex_tensors():
    with pytest.raises(PreconditionError):
        Mpo([np.ones((1, 4, 1), dtype=complex), np.ones((1, 4, 1))])


def test_scaled_multiplies_operator():
    mpo = mpo_pauli_string(3, {1: "x"})
    np.testing.assert_allclose(mpo_to_dense(mpo.scaled(-2.0)), -2 * mpo_to_dense(mpo), atol=1e-14)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 16), center=st.integers(0, 4))
def test_canonicalize_preserves_operator(seed, center):
    mpo = mpo_random(5, 6, np.random.default_rng(seed))
    before = mpo_to_dense(mpo)
    canonicalize(mpo, center)
    np.testing.assert_allclose(mpo_to_dense(mpo), before, atol=1e-9 * np.max(np.abs(before)))
    for j in range(center):
        assert is_left_orthonormal(mpo.tensors[j])
    for j in range(center + 1, 5):
        assert is_right_orthonormal(mpo.tensors[j])


def test_canonicalize_is_idempotent():
    mpo = mpo_random(6, 5, np.random.default_rng(4))
    canonicalize(mpo, 2)
    first = [t.copy() for t in mpo.tensors]
    canonicalize(mpo, 2)
    for a, b in zip(first, mpo.tensors):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_move_center_keeps_operator():
    mpo = mpo_random(6, 4, np.random.default_rng(5))
    canonicalize(mpo, 0)
    before = mpo_to_dense(mpo)
    move_center(mpo, 5)
    assert mpo.center == 5
    np.testing.assert_allclose(mpo_to_dense(mpo), before, atol=1e-9 * np.max(np.abs(before)))


def test_hs_inner_matches_dense_trace():
    rng = np.random.default_rng(6)
    a, b = mpo_random(4, 5, rng), mpo_random(4, 5, rng)
    dense = np.trace(mpo_to_dense(a).conj().T @ mpo_to_dense(b)).real / 2 ** 4
    assert hs_inner(a, b) == pytest.approx(dense, rel=1e-10)


def test_identity_gate_is_exact():
    mpo = mpo_random(4, 4, np.random.default_rng(7))
    before = mpo_to_dense(mpo)
    report = apply_gate(mpo, 1, np.eye(16), d_max=16)
    assert report.eta == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(mpo_to_dense(mpo), before, atol=1e-9 * np.max(np.abs(before)))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 16), bond=st.integers(0, 4), d_max=st.integers(1, 6))
def test_truncation_drops_norm_by_one_minus_eta(seed, bond, d_max):
    rng = np.random.default_rng(seed)
    mpo = mpo_random(6, 12, rng)
    norm2 = hs_inner(mpo, mpo)
    report = apply_gate(mpo, bond, random_unitary_gate(rng), d_max=d_max)
    assert 0.0 <= report.eta <= 1.0
    assert report.kept <= d_max
    assert hs_inner(mpo, mpo) == pytest.approx(norm2 * (1 - report.eta), rel=1e-9)
    assert all(np.isrealobj(t) for t in mpo.tensors)


def test_renormalize_moves_norm_into_log_norm():
    rng = np.random.default_rng(8)
    mpo = mpo_random(5, 8, rng)
    norm2 = hs_inner(mpo, mpo)
    report = apply_gate(mpo, 2, random_unitary_gate(rng), d_max=2, renormalize=True)
    assert hs_inner(mpo, mpo) == pytest.approx(norm2 * (1 - report.eta), rel=1e-9)
    assert np.linalg.norm(mpo.tensors[mpo.center]) == pytest.approx(1.0)


def test_gate_direction_sets_center():
    rng = np.random.default_rng(9)
    mpo = mpo_random(5, 4, rng)
    apply_gate(mpo, 1, random_unitary_gate(rng), d_max=16, direction="right")
    assert mpo.center == 2
    apply_gate(mpo, 1, random_unitary_gate(rng), d_max=16, direction="left")
    assert mpo.center == 1


def test_single_gate_error_scales_with_dt_squared():
    h = np.kron(SIGMA_X, SIGMA_X) + np.kron(SIGMA_Z, IDENTITY) + np.kron(SIGMA_X, IDENTITY)

    def eta(dt):
        mpo = mpo_pauli_string(2, {0: "z"})
        gate = adjoint_gate(linalg.expm_hermitian(h, -1j * dt), GateKind.REAL)
        return apply_gate(mpo, 0, gate, d_max=1).eta

    ratio = eta(2e-3) / eta(1e-3)
    assert 3.5 < ratio < 4.5


def test_real_time_layers_preserve_identity():
    mpo = mpo_identity(6)
    scheme = trotter_step(ModelParams.chaotic(6), 0.1)
    eta = sum(apply_layer(mpo, layer, d_max=4) for layer in scheme.layers)
    assert eta == pytest.approx(0.0, abs=1e-20)
    assert mpo.max_bond == 1
    assert pauli_weight(mpo, {}) == pytest.approx(1.0)


def test_normalize_gives_unit_norm():
    mpo = mpo_random(5, 4, np.random.default_rng(10)).scaled(7.0)
    normalize(mpo)
    assert mpo.log_norm == 0.0
    assert hs_norm(mpo) == pytest.approx(1.0)


def test_snapshot_round_trip_is_bit_exact(tmp_path):
    mpo = mpo_random(5, 6, np.random.default_rng(11))
    canonicalize(mpo, 3)
    mpo.log_norm = -1.25
    path = tmp_path / "snap.h5"
    save_snapshot(mpo, str(path), {"t": np.arange(4.0), "step": 7, "label": "local:y"})
    loaded, extra = load_snapshot(str(path))
    assert loaded.center == 3
    assert loaded.log_norm == -1.25
    for a, b in zip(mpo.tensors, loaded.tensors):
        assert np.array_equal(a, b)
    assert np.array_equal(extra["t"], np.arange(4.0))
    assert extra["step"] == 7
    assert extra["label"] == "local:y"
