"""Dense Hermitian linear algebra and scalar root finding.

Everything downstream (filter design, quantizer planning, capacity
evaluation) funnels through these helpers so that eigenvector ordering,
phase and log-determinant evaluation are identical everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketError, ConvergenceError, InvalidInputError

EIG_TOL = 1e-10
BISECT_TOL = 1e-9
BISECT_MAX_ITER = 200
PHASE_EPS = 1e-12


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition ``A = U diag(w) U^H`` with descending ``w``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T


def fix_phase(U: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real and >= 0."""
    U = np.array(U, dtype=complex, copy=True)
    if U.size == 0:
        return U
    mag = np.abs(U)
    first = np.argmax(mag > PHASE_EPS, axis=0)
    cols = np.arange(U.shape[1])
    pivot = U[first, cols]
    scale = np.ones(U.shape[1], dtype=complex)
    nz = np.abs(pivot) > PHASE_EPS
    scale[nz] = np.abs(pivot[nz]) / pivot[nz]
    U *= scale
    # the pivot is now real up to rounding; make it exactly real
    U[first[nz], cols[nz]] = U[first[nz], cols[nz]].real
    return U


def _check_square(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


def hermitian_eig(A: np.ndarray) -> HermitianEig:
    """Sorted, phase-normalized eigendecomposition of a Hermitian matrix.

    Eigenvalues come out non-increasing. Ties keep the order returned by
    LAPACK's ascending solver reversed by a stable sort, so equal eigenvalues
    stay in ascending original index order. Each eigenvector is rotated so its
    first entry with magnitude above 1e-12 is real and non-negative.
    """
    A = _check_square(A)
    A = 0.5 * (A + A.conj().T)
    w, U = np.linalg.eigh(A)
    order = np.argsort(-w, kind="stable")
    return HermitianEig(eigenvalues=w[order], eigenvectors=fix_phase(U[:, order]))


def principal_subspace(A: np.ndarray, N: int) -> np.ndarray:
    """Orthonormal basis of the ``N`` dominant eigenvectors of ``A``."""
    A = _check_square(A)
    n = A.shape[0]
    if not 1 <= N <= n:
        raise InvalidInputError(f"N={N} outside [1, {n}]")
    return hermitian_eig(A).eigenvectors[:, :N]


def orthonormalize(M: np.ndarray) -> np.ndarray:
    """Thin-QR orthonormal basis for the column span of ``M``."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[1] > M.shape[0]:
        raise InvalidInputError(f"need a tall matrix, got shape {M.shape}")
    Q, _ = np.linalg.qr(M)
    return fix_phase(Q)


def orthonormal_complement(W: np.ndarray) -> np.ndarray:
    """Columns spanning the orthogonal complement of ``span(W)``.

    ``W`` must already have orthonormal columns. Returns an ``M x (M - N)``
    matrix (possibly with zero columns).
    """
    W = np.asarray(W, dtype=complex)
    M, N = W.shape
    if N == M:
        return np.zeros((M, 0), dtype=complex)
    Q, _ = np.linalg.qr(W, mode="complete")
    return fix_phase(Q[:, N:])


def random_orthonormal(rng: np.random.Generator, n: int, N: int) -> np.ndarray:
    """Orthonormal ``n x N`` matrix from a complex Gaussian draw."""
    G = rng.standard_normal((n, N)) + 1j * rng.standard_normal((n, N))
    return orthonormalize(G)


def crandn(rng: np.random.Generator, shape, var: float | np.ndarray = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with variance ``var``."""
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z * np.sqrt(np.asarray(var) / 2.0)


def log2det_pd(A: np.ndarray) -> np.ndarray | float:
    """``log2 det(A)`` for Hermitian positive definite ``A`` (batched).

    Uses the Cholesky factor. Raises ``numpy.linalg.LinAlgError`` if ``A`` is
    not numerically positive definite.
    """
    A = np.asarray(A)
    A = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    L = np.linalg.cholesky(A)
    diag = np.diagonal(L, axis1=-2, axis2=-1).real
    out = 2.0 * np.sum(np.log2(diag), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def log2det_eye_plus(X: np.ndarray) -> np.ndarray | float:
    """``log2 det(I + X)`` for Hermitian PSD ``X`` (batched over leading axes)."""
    X = np.asarray(X)
    n = X.shape[-1]
    return log2det_pd(X + np.eye(n))


def inv_pd(A: np.ndarray) -> np.ndarray:
    """Inverse of a Hermitian positive definite matrix (batched)."""
    A = np.asarray(A)
    A = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    n = A.shape[-1]
    eye = np.broadcast_to(np.eye(n, dtype=A.dtype), A.shape)
    out = np.linalg.solve(A, eye)
    return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))


def bisect_monotone(
    f: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    tol: float = BISECT_TOL,
    max_iter: int = BISECT_MAX_ITER,
    geometric: bool = False,
) -> float:
    """Solve ``f(x) = target`` for a monotonically decreasing ``f``.

    Parameters
    ----------
    f : callable
        Scalar, non-increasing on ``[lo, hi]``.
    target : float
        Value to hit; must satisfy ``f(lo) >= target >= f(hi)``.
    lo, hi : float
        Bracket. With ``geometric=True`` both must be positive and the
        midpoint is taken in log space, which suits variables spanning many
        decades.
    tol : float
        Stop once ``|f(x) - target| <= tol``.

    Raises
    ------
    BracketError
        If the bracket does not enclose the target.
    ConvergenceError
        If ``max_iter`` halvings do not reach ``tol``.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if not lo < hi:
        raise BracketError(f"empty bracket [{lo}, {hi}]")
    if geometric and lo <= 0:
        raise BracketError("geometric bisection needs lo > 0")
    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo >= target >= f_hi):
        raise BracketError(
            f"f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g} do not bracket target {target:.6g}"
        )
    if abs(f_lo - target) <= tol:
        return lo
    if abs(f_hi - target) <= tol:
        return hi
    for _ in range(max_iter):
        mid = np.sqrt(lo * hi) if geometric else 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm - target) <= tol:
            return float(mid)
        if fm > target:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(f"bisection did not reach tol={tol} in {max_iter} steps")


def bisect_monotone_batch(
    f: Callable[[np.ndarray], np.ndarray],
    target: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float = BISECT_TOL,
    max_iter: int = BISECT_MAX_ITER,
    geometric: bool = False,
) -> np.ndarray:
    """Elementwise :func:`bisect_monotone` over arrays of independent problems.

    ``f`` maps an array of abscissae (same shape as ``target``) to the array
    of function values, problem by problem.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    f_lo, f_hi = f(lo), f(hi)
    if not np.all((f_lo >= target) & (target >= f_hi)):
        raise BracketError("batch bracket does not enclose every target")
    x = np.where(np.abs(f_lo - target) <= tol, lo, hi)
    done = (np.abs(f_lo - target) <= tol) | (np.abs(f_hi - target) <= tol)
    for _ in range(max_iter):
        if done.all():
            return x
        mid = np.sqrt(lo * hi) if geometric else 0.5 * (lo + hi)
        fm = f(mid)
        hit = ~done & (np.abs(fm - target) <= tol)
        x = np.where(hit, mid, x)
        done |= hit
        up = fm > target
        lo = np.where(~done & up, mid, lo)
        hi = np.where(~done & ~up, mid, hi)
    if not done.all():
        raise ConvergenceError(f"batch bisection did not reach tol={tol} in {max_iter} steps")
    return x
