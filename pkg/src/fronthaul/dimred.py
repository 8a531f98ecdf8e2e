"""Receiver-side dimension reduction filter design.

Each receiver ``l`` forwards ``z_l = W_l^H y_l`` with ``W_l`` an ``M x N``
matrix with orthonormal columns. The filters here either act on local CSI
only (truncated KLT, antenna reduction) or are designed jointly from global
CSI (block-coordinate ascent on the joint mutual information, greedy antenna
selection).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FronthaulError, InvalidInputError, RankDeficientError
from .numerics import (
    HermitianEig,
    hermitian_eig,
    inv_pd,
    log2det_eye_plus,
    orthonormal_complement,
    principal_subspace,
)
from .scenario import ChannelSet

TKLT = "TKLT"
TCKLT = "TCKLT"
ANTENNA_SELECT = "ANTENNA_SELECT"
ANTENNA_REDUCE = "ANTENNA_REDUCE"
NONE = "NONE"
METHODS = (TCKLT, TKLT, ANTENNA_SELECT, ANTENNA_REDUCE, NONE)

ORTHO_TOL = 1e-10
MONOTONE_SLACK = 1e-9


def n_bounds(K: int, L: int, M: int) -> tuple[int, int]:
    """Admissible range of the reduced dimension ``N``."""
    return math.ceil(K / L), min(M, K)


@dataclass
class FilterBank:
    W: list[np.ndarray]
    N: int
    method: str
    # joint MI after initialization and after every inner update (BCA only)
    trace: list[float] = field(default_factory=list)
    sweeps: int = 0

    def __post_init__(self):
        for l, W in enumerate(self.W):
            if W.shape[1] != self.N:
                raise InvalidInputError(f"W_{l} has {W.shape[1]} columns, expected N={self.N}")
            err = np.abs(W.conj().T @ W - np.eye(self.N)).max()
            if err > ORTHO_TOL:
                raise InvalidInputError(f"W_{l} columns not orthonormal (err {err:.2e})")

    @property
    def L(self) -> int:
        return len(self.W)

    def sweep_values(self) -> list[float]:
        """Objective at initialization and at the end of each outer sweep."""
        if not self.trace:
            return []
        per = (len(self.trace) - 1) // max(self.sweeps, 1) if self.sweeps else 0
        return [self.trace[0]] + [self.trace[per * (j + 1)] for j in range(self.sweeps)]


@dataclass
class ReducedChannelSet:
    """Equivalent channels ``G_l = W_l^H H_l`` and their local spectra."""

    G: list[np.ndarray]
    eig: list[HermitianEig]
    rho: float

    @property
    def L(self) -> int:
        return len(self.G)

    @property
    def K(self) -> int:
        return self.G[0].shape[1]

    @property
    def N(self) -> int:
        return self.G[0].shape[0]

    @property
    def gamma(self) -> np.ndarray:
        """Eigenvalues of ``G_l G_l^H`` as an ``(L, N)`` array, clipped at 0."""
        return np.maximum(np.array([e.eigenvalues for e in self.eig]), 0.0)

    @property
    def gamma_bar(self) -> np.ndarray:
        g = self.gamma
        with np.errstate(divide="ignore"):
            return np.exp(np.mean(np.log(g), axis=1))

    @property
    def V(self) -> list[np.ndarray]:
        return [e.eigenvectors for e in self.eig]

    def grams(self) -> np.ndarray:
        """``G_l^H G_l`` stacked as ``(L, K, K)``."""
        G = np.stack(self.G)
        return np.conj(np.swapaxes(G, -1, -2)) @ G


def _filters(fb) -> list[np.ndarray]:
    return fb.W if isinstance(fb, FilterBank) else list(fb)


def _grams(H: list[np.ndarray], W: list[np.ndarray]) -> np.ndarray:
    """``H_l^H W_l W_l^H H_l`` for each receiver, shape ``(L, K, K)``."""
    out = []
    for Hl, Wl in zip(H, W):
        G = Wl.conj().T @ Hl
        out.append(G.conj().T @ G)
    return np.array(out)


def reduce_channels(cs: ChannelSet, fb) -> ReducedChannelSet:
    G = [Wl.conj().T @ Hl for Hl, Wl in zip(cs.H, _filters(fb))]
    return ReducedChannelSet(G=G, eig=[hermitian_eig(g @ g.conj().T) for g in G], rho=cs.rho)


def full_mi(cs: ChannelSet) -> float:
    """Unquantized full-dimension ``I(y_1..y_L; x)`` in bpcu."""
    H = cs.stacked()
    S = np.einsum("lmk,lmj->kj", H.conj(), H)
    return float(log2det_eye_plus(cs.rho * S))


def joint_mi(cs: ChannelSet, fb) -> float:
    """``log2 det(I_K + rho sum_l H_l^H W_l W_l^H H_l)``."""
    S = _grams(cs.H, _filters(fb)).sum(axis=0)
    return float(log2det_eye_plus(cs.rho * S))


def conditional_mi(l: int, cs: ChannelSet, fb) -> float:
    """``I(z_l; x | z_other)`` evaluated through the conditional covariance."""
    W = _filters(fb)
    Q = _grams(cs.H, W)
    A = inv_pd(np.eye(cs.K) + cs.rho * (Q.sum(axis=0) - Q[l]))
    B = W[l].conj().T @ cs.H[l]
    return float(log2det_eye_plus(cs.rho * B @ A @ B.conj().T))


def _check_N(cs: ChannelSet, N: int) -> None:
    lo, hi = n_bounds(cs.K, cs.L, cs.M)
    if not lo <= N <= hi:
        raise InvalidInputError(f"N={N} outside admissible range [{lo}, {hi}]")


def _check_finite(cs: ChannelSet) -> None:
    if not all(np.all(np.isfinite(H)) for H in cs.H) or not np.isfinite(cs.rho):
        raise InvalidInputError("channel set has non-finite entries")


def tklt(H_l: np.ndarray, N: int) -> np.ndarray:
    """Truncated KLT: the ``N`` principal eigenvectors of ``H_l H_l^H``."""
    return principal_subspace(H_l @ H_l.conj().T, N)


def tklt_bank(cs: ChannelSet, N: int) -> FilterBank:
    _check_N(cs, N)
    return FilterBank(W=[tklt(H, N) for H in cs.H], N=N, method=TKLT)


def tcklt_bca(cs: ChannelSet, N: int, j_max: int = 3, rel_tol: float = 1e-6) -> FilterBank:
    """Truncated conditional KLT filters by block-coordinate ascent.

    Starts from the truncated KLT and, receiver by receiver, replaces ``W_l``
    with the principal eigenvectors of ``H_l A_l H_l^H`` where ``A_l`` is the
    inverse conditional covariance given the other receivers' reduced
    signals. Runs ``j_max`` sweeps or stops early once a sweep improves the
    joint MI by a relative amount below ``rel_tol``.

    The joint MI after every inner update is stored in ``trace``; a decrease
    beyond rounding raises ``FronthaulError``.
    """
    _check_finite(cs)
    _check_N(cs, N)
    if j_max < 1:
        raise InvalidInputError("j_max must be >= 1")
    rho, K = cs.rho, cs.K
    eye = np.eye(K)
    W = [tklt(H, N) for H in cs.H]
    Q = _grams(cs.H, W)
    S = Q.sum(axis=0)
    trace = [float(log2det_eye_plus(rho * S))]
    sweeps = 0
    for _ in range(j_max):
        start = trace[-1]
        for l, Hl in enumerate(cs.H):
            A = inv_pd(eye + rho * (S - Q[l]))
            W[l] = principal_subspace(Hl @ A @ Hl.conj().T, N)
            G = W[l].conj().T @ Hl
            Q[l] = G.conj().T @ G
            S = Q.sum(axis=0)
            val = float(log2det_eye_plus(rho * S))
            if val < trace[-1] - MONOTONE_SLACK * max(1.0, abs(trace[-1])):
                raise FronthaulError(
                    f"BCA objective decreased from {trace[-1]!r} to {val!r} at receiver {l}"
                )
            trace.append(val)
        sweeps += 1
        if trace[-1] - start < rel_tol * max(abs(start), 1e-300):
            break
    return FilterBank(W=W, N=N, method=TCKLT, trace=trace, sweeps=sweeps)


@dataclass(frozen=True)
class InfoLoss:
    loss: float  # bpcu lost by the reduction at this SNR
    bound: float  # SNR-independent upper bound (inf if the kept channel is rank deficient)


def info_loss(cs: ChannelSet, fb) -> InfoLoss:
    """Information discarded by the reduction, ``I(y; x | z)``, and its cap."""
    W = _filters(fb)
    K, rho = cs.K, cs.rho
    kept = _grams(cs.H, W).sum(axis=0)
    dropped = _grams(cs.H, [orthonormal_complement(Wl) for Wl in W]).sum(axis=0)
    eye = np.eye(K)
    # det(I + X B) with B PD equals det(I + B^1/2 X B^1/2); keep it Hermitian
    B = inv_pd(eye + rho * kept)
    loss = _log2det_sandwich(rho * dropped, B)
    w = np.linalg.eigvalsh(kept)
    if w[0] <= 1e-12 * max(w[-1], 1e-300):
        bound = math.inf
    else:
        bound = _log2det_sandwich(dropped, inv_pd(kept))
    return InfoLoss(loss=loss, bound=bound)


def _log2det_sandwich(X: np.ndarray, B: np.ndarray) -> float:
    """``log2 det(I + X B)`` for PSD ``X`` and PD ``B``."""
    C = np.linalg.cholesky(0.5 * (B + B.conj().T))
    return float(log2det_eye_plus(C.conj().T @ X @ C))


def antenna_reduce(cs: ChannelSet, N: int) -> FilterBank:
    """Keep the first ``N`` antennas at every receiver."""
    _check_N(cs, N)
    W = np.eye(cs.M, N, dtype=complex)
    return FilterBank(W=[W.copy() for _ in range(cs.L)], N=N, method=ANTENNA_REDUCE)


def antenna_selection(cs: ChannelSet, N: int) -> FilterBank:
    """Greedy joint-MI antenna selection with a per-receiver budget of ``N``.

    Receivers take turns (round-robin); at each turn the receiver adds the
    unused antenna giving the largest joint MI given everything selected so
    far. Adding antenna row ``a`` raises the log-det by
    ``log2(1 + rho a^H (I + rho S)^{-1} a)``, so only that quadratic form is
    compared. Ties go to the lowest antenna index.
    """
    _check_N(cs, N)
    rho, K, M = cs.rho, cs.K, cs.M
    chosen: list[list[int]] = [[] for _ in range(cs.L)]
    S = np.zeros((K, K), dtype=complex)
    eye = np.eye(K)
    for _ in range(N):
        for l, Hl in enumerate(cs.H):
            B = inv_pd(eye + rho * S)
            rows = Hl.conj()  # row m as a K-vector a_m = conj(H_l[m, :])
            score = np.einsum("mk,kj,mj->m", rows.conj(), B, rows).real
            score[chosen[l]] = -np.inf
            m = int(np.argmax(score))
            chosen[l].append(m)
            a = rows[m]
            S = S + np.outer(a, a.conj())
    W = []
    for idx in chosen:
        Wl = np.zeros((M, N), dtype=complex)
        Wl[idx, np.arange(N)] = 1.0
        W.append(Wl)
    return FilterBank(W=W, N=N, method=ANTENNA_SELECT)


def no_reduction(cs: ChannelSet) -> FilterBank:
    """Identity filters: every antenna is forwarded (``N = M``)."""
    return FilterBank(W=[np.eye(cs.M, dtype=complex) for _ in range(cs.L)], N=cs.M, method=NONE)


def design_filters(cs: ChannelSet, method: str, N: int | None = None, j_max: int = 3) -> FilterBank:
    if method == NONE:
        return no_reduction(cs)
    if method == TCKLT:
        return tcklt_bca(cs, N, j_max=j_max)
    if method == TKLT:
        return tklt_bank(cs, N)
    if method == ANTENNA_SELECT:
        return antenna_selection(cs, N)
    if method == ANTENNA_REDUCE:
        return antenna_reduce(cs, N)
    raise InvalidInputError(f"unknown method {method!r}")


def high_snr_update_matrix(channels, fb, l: int) -> np.ndarray:
    """``H_l (sum_{i != l} H_i^H W_i W_i^H H_i)^{-1} H_l^H``.

    This is the high-SNR limit of ``rho H_l A_l H_l^H`` and is unchanged by
    per-user power control scaling of the channel columns.

    Raises
    ------
    RankDeficientError
        If the other receivers' reduced observations span fewer than ``K``
        dimensions.
    """
    H = channels.H if isinstance(channels, ChannelSet) else list(channels)
    W = _filters(fb)
    Q = _grams(H, W)
    other = Q.sum(axis=0) - Q[l]
    w = np.linalg.eigvalsh(0.5 * (other + other.conj().T))
    if w[0] <= 1e-12 * max(w[-1], 1e-300):
        raise RankDeficientError(
            f"conditioning observations for receiver {l} are rank deficient"
        )
    X = H[l] @ np.linalg.solve(other, H[l].conj().T)
    return 0.5 * (X + X.conj().T)
