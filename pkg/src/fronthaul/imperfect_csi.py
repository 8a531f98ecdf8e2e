"""Filter design and compression from MMSE channel estimates.

The unknown part of the channel, ``E_l x``, is lumped with thermal noise
into an effective noise of covariance ``Omega_l = I + rho C_l``. After
whitening by ``Omega_l^{-1/2}`` the perfect-CSI machinery applies to the
whitened estimates ``H_check_l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dimred
from .compression import CompressionPlan
from .dimred import FilterBank, ReducedChannelSet
from .numerics import hermitian_eig, log2det_eye_plus
from .scenario import ChannelSet, EstimatedChannelSet


@dataclass
class WhitenedChannelSet:
    H_check: list[np.ndarray]
    Omega_inv_sqrt: list[np.ndarray]
    source: EstimatedChannelSet
    rho: float

    @property
    def L(self) -> int:
        return len(self.H_check)

    def as_channel_set(self) -> ChannelSet:
        return ChannelSet(H=self.H_check, rho=self.rho)

    def omega(self, l: int) -> np.ndarray:
        C = self.source.C[l]
        return np.eye(C.shape[0]) + self.rho * C


def _inv_sqrt_psd(A: np.ndarray) -> np.ndarray:
    e = hermitian_eig(A)
    U = e.eigenvectors
    return (U * e.eigenvalues ** -0.5) @ U.conj().T


def whitening(est: EstimatedChannelSet, rho: float | None = None) -> WhitenedChannelSet:
    """Whiten the estimation-error-plus-noise term at every receiver."""
    rho = est.rho if rho is None else rho
    facs, Hc = [], []
    for H, C in zip(est.H_hat, est.C):
        F = _inv_sqrt_psd(np.eye(C.shape[0]) + rho * C)
        facs.append(F)
        Hc.append(F @ H)
    return WhitenedChannelSet(H_check=Hc, Omega_inv_sqrt=facs, source=est, rho=rho)


def design_filters_imperfect(
    wcs: WhitenedChannelSet, N: int, j_max: int = 3, method: str = dimred.TCKLT
) -> FilterBank:
    """Filters for the whitened signals ``W_l^H Omega_l^{-1/2} y_l``."""
    return dimred.design_filters(wcs.as_channel_set(), method, N, j_max=j_max)


def reduced_channel_imperfect(wcs: WhitenedChannelSet, fb) -> ReducedChannelSet:
    """Estimated equivalent channels ``W_l^H Omega_l^{-1/2} H_hat_l``."""
    return dimred.reduce_channels(wcs.as_channel_set(), fb)


def mi_lower_bound(wcs: WhitenedChannelSet, fb, rho: float | None = None) -> float:
    """Per-realization lower bound on the expected joint MI of the reduced signals."""
    cs = wcs.as_channel_set() if rho is None else ChannelSet(H=wcs.H_check, rho=rho)
    return dimred.joint_mi(cs, fb)


def mi_snr_cap(wcs: WhitenedChannelSet, fb) -> float:
    """SNR-independent cap ``log2 det(I + sum H_hat^H C^-1/2 W W^H C^-1/2 H_hat)``.

    Infinite when some ``C_l`` is singular (perfect estimates).
    """
    W = dimred._filters(fb)
    K = wcs.H_check[0].shape[1]
    S = np.zeros((K, K), dtype=complex)
    for Wl, H, C in zip(W, wcs.source.H_hat, wcs.source.C):
        w = np.linalg.eigvalsh(C)
        if w[0] <= 0:
            return math.inf
        B = Wl.conj().T @ _inv_sqrt_psd(C) @ H
        S += B.conj().T @ B
    return float(log2det_eye_plus(S))


def _effective_observations(wcs: WhitenedChannelSet, fb, l: int):
    """True reduced channel and noise covariance at receiver ``l``."""
    Wl = dimred._filters(fb)[l]
    F = wcs.Omega_inv_sqrt[l]
    T = Wl.conj().T @ F
    return T @ wcs.source.H_true[l], T @ T.conj().T


def genie_variances(wcs: WhitenedChannelSet, fb, V: list[np.ndarray]) -> np.ndarray:
    """Realized variances of the decorrelated components given the true channel."""
    out = []
    for l, Vl in enumerate(V):
        G, Nc = _effective_observations(wcs, fb, l)
        cov = wcs.rho * G @ G.conj().T + Nc
        out.append(np.real(np.einsum("ni,nm,mi->i", Vl.conj(), cov, Vl)))
    return np.array(out)


def genie_sum_capacity(wcs: WhitenedChannelSet, fb, plan: CompressionPlan) -> float:
    """Sum capacity actually delivered over the true channels by an estimate-based plan."""
    K = wcs.H_check[0].shape[1]
    S = np.zeros((K, K), dtype=complex)
    for l in range(wcs.L):
        G, Nc = _effective_observations(wcs, fb, l)
        keep = ~plan.erased[l]
        if not keep.any():
            continue
        Vk = plan.V[l][:, keep]
        Gk = Vk.conj().T @ G
        Nk = Vk.conj().T @ Nc @ Vk + np.diag(plan.phi[l][keep])
        S += Gk.conj().T @ np.linalg.solve(Nk, Gk)
    return float(log2det_eye_plus(wcs.rho * S))
