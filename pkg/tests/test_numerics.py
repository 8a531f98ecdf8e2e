import math

import numpy as np
import pytest

from fronthaul.errors import BracketError, ConvergenceError
from fronthaul.numerics import (
    bisect_monotone,
    bisect_monotone_batch,
    fix_phase,
    hermitian_eig,
    inv_pd,
    log2det_eye_plus,
    log2det_pd,
    orthonormal_complement,
    principal_subspace,
    random_orthonormal,
)

from conftest import random_hermitian


def test_identity_eig():
    e = hermitian_eig(np.eye(3))
    np.testing.assert_allclose(e.eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(e.eigenvectors, np.eye(3), atol=1e-15)


def test_diagonal_eig_sorted_descending():
    e = hermitian_eig(np.diag([1.0, 3.0]))
    np.testing.assert_allclose(e.eigenvalues, [3, 1])
    np.testing.assert_allclose(np.abs(e.eigenvectors), [[0, 1], [1, 0]], atol=1e-15)
    e = hermitian_eig(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(e.eigenvectors, np.eye(2), atol=1e-15)


def test_reconstruction(rng):
    for _ in range(50):
        A = random_hermitian(rng, 4)
        e = hermitian_eig(A)
        np.testing.assert_allclose(e.reconstruct(), A, atol=1e-10)
        assert np.all(np.diff(e.eigenvalues) <= 0)


def test_phase_convention(rng):
    A = random_hermitian(rng, 5)
    U = hermitian_eig(A).eigenvectors
    for j in range(5):
        first = U[np.argmax(np.abs(U[:, j]) > 1e-12), j]
        assert abs(first.imag) < 1e-14 and first.real > 0
    # convention is idempotent and removes arbitrary phases
    D = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 5)))
    np.testing.assert_allclose(fix_phase(U @ D), U, atol=1e-12)


def test_principal_subspace():
    np.testing.assert_allclose(principal_subspace(np.diag([2.0, 1.0]), 1), [[1], [0]])
    np.testing.assert_allclose(principal_subspace(np.eye(2), 1), [[1], [0]])


def test_principal_subspace_det(rng):
    A = random_hermitian(rng, 6, psd=True)
    W = principal_subspace(A, 2)
    lam = hermitian_eig(A).eigenvalues
    assert np.linalg.det(W.conj().T @ A @ W).real == pytest.approx(lam[0] * lam[1], rel=1e-9)


def test_complement_spans_rest(rng):
    W = random_orthonormal(rng, 6, 2)
    Wc = orthonormal_complement(W)
    Q = np.hstack([W, Wc])
    np.testing.assert_allclose(Q.conj().T @ Q, np.eye(6), atol=1e-12)


def test_logdet_and_inverse(rng):
    A = random_hermitian(rng, 5, psd=True) + np.eye(5)
    assert log2det_pd(A) == pytest.approx(np.log2(np.linalg.det(A).real), rel=1e-12)
    np.testing.assert_allclose(inv_pd(A) @ A, np.eye(5), atol=1e-10)
    assert log2det_eye_plus(np.zeros((3, 3))) == 0.0
    batch = np.stack([A, 2 * A])
    np.testing.assert_allclose(log2det_pd(batch), [log2det_pd(A), log2det_pd(A) + 5])


@pytest.mark.parametrize(
    "f, target, expected",
    [
        (lambda d: math.log2(1 + 16 / d), 4.0, 16 / 15),
        (lambda d: math.log2(1 + 1 / d), 1.0, 1.0),
        (lambda d: 2 * math.log2(1 + 4 / d), 6.0, 4 / 7),
    ],
)
@pytest.mark.parametrize("geometric", [False, True])
def test_bisection_closed_forms(f, target, expected, geometric):
    x = bisect_monotone(f, target, 1e-9, 1e6, tol=1e-12, geometric=geometric)
    assert abs(f(x) - target) <= 1e-12
    assert x == pytest.approx(expected, rel=1e-9)


def test_bisection_errors():
    f = lambda d: math.log2(1 + 1 / d)
    with pytest.raises(BracketError):
        bisect_monotone(f, 1.0, 10.0, 100.0)
    with pytest.raises(ConvergenceError):
        bisect_monotone(f, 1.0, 1e-9, 1e6, tol=1e-300, max_iter=5)


def test_bisection_batch_matches_scalar():
    s = np.array([16.0, 1.0, 100.0])
    R = np.array([4.0, 1.0, 3.0])
    f = lambda d: np.log2(1 + s / d)
    x = bisect_monotone_batch(f, R, 1e-9, 1e6, geometric=True)
    np.testing.assert_allclose(x, s / (2 ** R - 1), rtol=1e-8)
