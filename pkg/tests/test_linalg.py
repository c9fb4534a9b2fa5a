"""Jacobi eigensolver against the LAPACK oracle."""

import numpy as np
import pytest

from pulsepair.linalg import hermitian_eigensystem


def _random_hermitian(rng, n=4):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def test_matches_lapack_eigenvalues():
    rng = np.random.default_rng(101)
    for _ in range(300):
        h = _random_hermitian(rng)
        w, _ = hermitian_eigensystem(h)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(h), atol=1e-12, rtol=0)


def test_reconstruction_and_orthonormality():
    rng = np.random.default_rng(202)
    for _ in range(100):
        h = _random_hermitian(rng)
        w, v = hermitian_eigensystem(h)
        assert np.abs(v.conj().T @ v - np.eye(4)).max() < 1e-12
        assert np.abs((v * w) @ v.conj().T - h).max() < 1e-11


def test_diagonal_matrix_is_fixed_point():
    w, v = hermitian_eigensystem(np.diag([3.0, -1.0, 2.0, 0.0]))
    np.testing.assert_allclose(w, [-1.0, 0.0, 2.0, 3.0], atol=0)
    assert np.abs(np.abs(v) - np.eye(4)[:, [1, 3, 2, 0]]).max() < 1e-15


def test_degenerate_spectrum():
    # projector with a doubly degenerate eigenvalue pair
    h = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    u = np.linalg.qr(np.random.default_rng(7).normal(size=(4, 4)))[0]
    h = u @ h @ u.conj().T
    w, v = hermitian_eigensystem(h)
    np.testing.assert_allclose(np.sort(w), [0, 0, 0.5, 0.5], atol=1e-13)
    assert np.abs((v * w) @ v.conj().T - h).max() < 1e-12


def test_rejects_non_square():
    with pytest.raises(ValueError):
        hermitian_eigensystem(np.zeros((2, 3)))


def test_scale_invariance_small_and_large():
    rng = np.random.default_rng(303)
    h = _random_hermitian(rng)
    for scale in (1e-12, 1.0, 1e12):
        w, _ = hermitian_eigensystem(h * scale)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(h) * scale, rtol=1e-12, atol=0)
