import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from workmoments.densemath import (
    commutator,
    hermitian_eigensystem,
    hermitian_expm,
    kron,
    matrix_exponential,
)
from workmoments.exceptions import DomainError, ShapeError, SizeError
from workmoments.model import ladder_operators

A, AD = ladder_operators()
SX = np.array([[0, 1], [1, 0]], dtype=complex)


def complex_matrices(n):
    parts = arrays(np.float64, (2, n, n), elements=st.floats(-3, 3, allow_nan=False))
    return parts.map(lambda x: x[0] + 1j * x[1])


def test_kron_examples():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(kron(np.diag([1, -1]), np.eye(2)), np.diag([1, 1, -1, -1]))
    # |e>|1> has index 1*3 + 1 = 4; a|e> = |g> maps it to index 0*3 + 1 = 1
    psi = np.zeros(6)
    psi[4] = 1.0
    out = kron(A, np.eye(3)) @ psi
    expected = np.zeros(6)
    expected[1] = 1.0
    assert np.array_equal(out, expected)


def test_kron_size_cap():
    with pytest.raises(SizeError):
        kron(np.eye(64), np.eye(65))
    with pytest.raises(ShapeError):
        kron(np.ones((2, 3)), np.eye(2))


def gaussian_integer_matrices(n):
    parts = arrays(np.int64, (2, n, n), elements=st.integers(-50, 50))
    return parts.map(lambda x: (x[0] + 1j * x[1]).astype(complex))


# entrywise equality is exact when all products are representable
@settings(max_examples=30, deadline=None)
@given(gaussian_integer_matrices(2), gaussian_integer_matrices(3), gaussian_integer_matrices(2))
def test_kron_associative(a, b, c):
    assert np.array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))


@settings(max_examples=30, deadline=None)
@given(complex_matrices(2), complex_matrices(3), complex_matrices(2))
def test_kron_associative_float(a, b, c):
    lhs, rhs = kron(kron(a, b), c), kron(a, kron(b, c))
    assert np.abs(lhs - rhs).max() <= 1e-14 * max(np.abs(lhs).max(), 1.0)


def test_commutator_examples():
    m = np.arange(9.0).reshape(3, 3)
    assert np.array_equal(commutator(m, m), np.zeros((3, 3)))
    assert np.array_equal(commutator(AD @ A, A), -A)
    # [sx, a_dag - a] is traceless: 2 diag(1, -1) in the (g, e) basis
    assert np.allclose(commutator(A + AD, AD - A), 2 * np.diag([1.0, -1.0]))
    with pytest.raises(ShapeError):
        commutator(np.eye(2), np.eye(3))


@settings(max_examples=50, deadline=None)
@given(complex_matrices(4), complex_matrices(4))
def test_commutator_traceless(a, b):
    assert abs(np.trace(commutator(a, b))) <= 1e-12 * max(1.0, np.abs(a).max() * np.abs(b).max())


def test_eigensystem_examples():
    w, v = hermitian_eigensystem(np.diag([0.0, 1.0]))
    assert np.allclose(w, [0, 1]) and np.allclose(np.abs(v), np.eye(2))
    w, _ = hermitian_eigensystem(0.3 * SX)
    assert np.allclose(w, [-0.3, 0.3])
    w, _ = hermitian_eigensystem(np.diag([0.0, 1.0]) + 0.05 * SX)
    assert np.allclose(w, [(1 - np.sqrt(1.01)) / 2, (1 + np.sqrt(1.01)) / 2], atol=1e-14)
    assert np.allclose(w, [-0.00249, 1.00249], atol=5e-6)
    with pytest.raises(DomainError):
        hermitian_eigensystem(np.array([[0, 1], [0, 0]]))


@settings(max_examples=40, deadline=None)
@given(complex_matrices(6))
def test_eigensystem_reconstruction(m):
    h = m + m.conj().T
    w, v = hermitian_eigensystem(h)
    scale = max(np.abs(w).max(), 1e-300)
    assert np.all(np.diff(w) >= 0)
    assert np.abs(h @ v - v * w).max() <= 1e-9 * scale
    assert np.abs(v.conj().T @ v - np.eye(6)).max() <= 1e-10
    assert np.abs((v * w) @ v.conj().T - h).max() <= 1e-9 * scale


def test_matrix_exponential_examples():
    assert np.allclose(matrix_exponential(np.zeros((3, 3))), np.eye(3), atol=0)
    theta = 0.7
    assert np.allclose(matrix_exponential(1j * theta * np.diag([1, -1])), np.diag([np.exp(1j * theta), np.exp(-1j * theta)]))
    assert np.allclose(matrix_exponential(1j * np.pi / 2 * SX, check=True), 1j * SX, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(complex_matrices(5))
def test_matrix_exponential_unitary_and_vs_eigh(m):
    h = m + m.conj().T
    u = matrix_exponential(-1j * h, check=True)
    assert np.abs(u.conj().T @ u - np.eye(5)).max() <= 1e-10
    assert np.abs(u - hermitian_expm(h)).max() <= 1e-10


def test_matrix_exponential_vs_scipy():
    from scipy.linalg import expm

    rng = np.random.default_rng(3)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    ref = expm(a)
    assert np.abs(matrix_exponential(a, check=True) - ref).max() <= 1e-11 * np.abs(ref).max()
