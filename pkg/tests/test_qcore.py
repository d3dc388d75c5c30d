import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geogate import qcore

angles = st.floats(-4 * math.pi, 4 * math.pi, allow_nan=False)


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (a + a.conj().T)


def random_rho(rng, d, rank=None):
    rank = rank or d
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_pauli_algebra():
    x, y, z = (qcore.pauli(a) for a in "xyz")
    assert np.allclose(x @ y, 1j * z)
    assert np.allclose(y @ z, 1j * x)
    for p in (x, y, z):
        assert np.allclose(p @ p, np.eye(2))
    assert np.array_equal(qcore.pauli("0"), qcore.pauli("i"))


def test_pauli_rejects_unknown_axis():
    with pytest.raises(ValueError):
        qcore.pauli("w")


def test_kron_ordering_puts_qubit_a_left():
    za = qcore.on_qubit(qcore.pauli("z"), "a", 2)
    assert np.allclose(np.diag(za), [1, 1, -1, -1])
    zb = qcore.on_qubit(qcore.pauli("z"), "b", 2)
    assert np.allclose(np.diag(zb), [1, -1, 1, -1])


def test_kron_rejects_non_qubit():
    with pytest.raises(qcore.DimensionError):
        qcore.kron(np.eye(3), np.eye(2))


def test_eigh_reconstructs_and_rejects_non_hermitian():
    rng = np.random.default_rng(1)
    h = random_hermitian(rng, 4)
    w, v = qcore.eigh(h)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose((v * w) @ v.conj().T, h, atol=1e-12)
    with pytest.raises(qcore.NotHermitianError):
        qcore.eigh(h + 1e-6j * np.eye(4) + np.triu(np.ones((4, 4)), 1))


def test_eigh_degenerate_spectrum():
    w, v = qcore.eigh(np.diag([1.0, 1.0, -2.0, -2.0]))
    assert np.allclose(w, [-2, -2, 1, 1])
    assert np.allclose(v.conj().T @ v, np.eye(4))


@given(angles, st.sampled_from("xyz"))
def test_rotation_is_unitary_and_matches_closed_form(angle, axis):
    r = qcore.rotation(axis, angle)
    assert np.allclose(r.conj().T @ r, np.eye(2), atol=1e-12)
    expected = math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * qcore.pauli(axis)
    assert np.allclose(r, expected, atol=1e-12)


def test_expm_antihermitian_batched_matches_scipy():
    from scipy.linalg import expm

    rng = np.random.default_rng(2)
    hs = np.stack([random_hermitian(rng, 4) for _ in range(3)])
    us = qcore.expm_antihermitian(hs, 0.37)
    for h, u in zip(hs, us):
        assert np.allclose(u, expm(-0.37j * h), atol=1e-12)


def test_expect_batched():
    psi = np.array([[1, 0], [0, 1], [1, 1] / np.sqrt(2)], dtype=complex)
    z = qcore.expect(psi, qcore.pauli("z"))
    assert np.allclose(z, [1, -1, 0])


def test_herm_sqrt_squares_back():
    rho = random_rho(np.random.default_rng(3), 4, rank=2)
    root = qcore.herm_sqrt(rho)
    assert np.allclose(root @ root, rho, atol=1e-10)


def test_clamp_eigenvalues_zeroes_negatives():
    assert np.array_equal(qcore.clamp_eigenvalues(np.array([-1e-12, -0.1, 0.0, 0.5])), [0, 0, 0, 0.5])


def test_check_density_matrix():
    qcore.check_density_matrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        qcore.check_density_matrix(np.eye(2))
    with pytest.raises(qcore.NotHermitianError):
        qcore.check_density_matrix(np.array([[0.5, 0.1], [0.2, 0.5]]))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_trace_distance_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_rho(rng, 2) for _ in range(3))
    dab = qcore.trace_distance(a, b)
    assert 0 <= dab <= 1 + 1e-12
    assert math.isclose(dab, qcore.trace_distance(b, a), abs_tol=1e-12)
    assert qcore.trace_distance(a, a) < 1e-12
    assert dab <= qcore.trace_distance(a, c) + qcore.trace_distance(c, b) + 1e-12


def test_trace_distance_orthogonal_states():
    assert math.isclose(qcore.trace_distance(np.diag([1.0, 0]), np.diag([0, 1.0])), 1.0)


@pytest.mark.parametrize("n", [1, 2])
def test_pauli_basis_is_orthogonal(n):
    labels, basis = qcore.pauli_basis(n)
    assert len(labels) == 4**n == len(set(labels))
    gram = np.einsum("pij,qji->pq", basis, basis)
    assert np.allclose(gram, 2**n * np.eye(4**n))
    assert labels[0] == "0" * n
