"""Achievable rates of the compressed uplink.

All log-determinants are taken in the ``K x K`` Gram form
``sum_l G_l^H G_l`` (same determinant as the ``N x N`` form by Sylvester's
identity). Quantization noise is treated as Gaussian throughout, consistent
with the forward test channel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .compression import CompressionPlan, uqn_plan
from .dimred import FilterBank, ReducedChannelSet, full_mi, joint_mi, reduce_channels
from .numerics import inv_pd, log2det_eye_plus
from .scenario import ChannelSet

log = logging.getLogger(__name__)

RANK_TOL = 1e-12


def _weighted_gram(rcs: ReducedChannelSet, Delta) -> np.ndarray:
    """``sum_l G_l^H G_l / (1 + Delta_l)``, batched over leading axes of Delta."""
    Delta = np.asarray(Delta, dtype=float)
    with np.errstate(divide="ignore"):
        w = 1.0 / (1.0 + Delta)
    return np.einsum("...l,lkj->...kj", w, rcs.grams())


def sum_capacity_sic(rcs: ReducedChannelSet, Delta) -> np.ndarray | float:
    """``log2 det(I_K + rho sum_l G_l^H G_l / (1 + Delta_l))``.

    ``Delta`` has shape ``(L,)`` or ``(..., L)`` for a batch of noise levels.
    """
    return log2det_eye_plus(rcs.rho * _weighted_gram(rcs, Delta))


def _log2det_or_neginf(S: np.ndarray) -> float:
    w = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    if w[0] <= RANK_TOL * max(w[-1], 1e-300):
        log.debug("rank-deficient Gram sum, min/max eigenvalue %.3g/%.3g", w[0], w[-1])
        return -math.inf
    return float(np.sum(np.log2(w)))


def fronthaul_limited_approx(rcs: ReducedChannelSet, R: float, K: int | None = None) -> float:
    """Quantization-noise-limited sum capacity ``R K / N + offset``.

    The offset ``log2 det(sum_l G_l^H G_l / gamma_bar_l)`` depends only on
    the reduced channels. Returns ``-inf`` when it is undefined.
    """
    K = rcs.K if K is None else K
    gb = rcs.gamma_bar
    if np.any(gb <= 0):
        log.debug("zero geometric-mean eigenvalue; approximation undefined")
        return -math.inf
    S = np.einsum("l,lkj->kj", 1.0 / gb, rcs.grams())
    return R * K / rcs.N + _log2det_or_neginf(S)


def lmmse_detectors(rcs: ReducedChannelSet, Delta) -> list[np.ndarray]:
    """LMMSE combining matrices ``B_l`` (each ``K x N``)."""
    Delta = np.asarray(Delta, dtype=float)
    T = np.eye(rcs.K) + rcs.rho * _weighted_gram(rcs, Delta)
    Tinv = inv_pd(T)
    return [rcs.rho * Tinv @ G.conj().T / (1.0 + d) for G, d in zip(rcs.G, Delta)]


def user_capacities_lmmse(rcs: ReducedChannelSet, Delta) -> tuple[np.ndarray, np.ndarray]:
    """Per-user SQINR and rate under LMMSE detection (batched like :func:`sum_capacity_sic`)."""
    T = np.eye(rcs.K) + rcs.rho * _weighted_gram(rcs, Delta)
    d = np.diagonal(inv_pd(T), axis1=-2, axis2=-1).real
    sqinr = np.maximum(1.0 / d - 1.0, 0.0)
    return sqinr, np.log2(1.0 + sqinr)


def cutset_bound(R: float, L: int, cs: ChannelSet) -> float:
    """``min(L R, I(y; x))``."""
    return min(L * R, full_mi(cs))


def sum_capacity_imperfect(rcs_hat: ReducedChannelSet, Phi) -> float:
    """Lower bound ``log2 det(I + rho sum_l G_l^H (I + Phi_l)^{-1} G_l)``.

    ``Phi`` is either a list of noise covariances or a :class:`CompressionPlan`
    (which also honours erased components).
    """
    if isinstance(Phi, CompressionPlan):
        P = [Phi.precision(l) for l in range(rcs_hat.L)]
    else:
        P = [inv_pd(np.eye(p.shape[0]) + p) for p in Phi]
    S = sum(G.conj().T @ Pl @ G for G, Pl in zip(rcs_hat.G, P))
    return float(log2det_eye_plus(rcs_hat.rho * S))


def lmmse_user_rate_approx(rcs: ReducedChannelSet, R: float) -> np.ndarray:
    """Fronthaul-limited user rates ``R/N - log2([(sum G^H G / gamma_bar)^-1]_kk)``."""
    gb = rcs.gamma_bar
    if np.any(gb <= 0):
        return np.full(rcs.K, -math.inf)
    S = np.einsum("l,lkj->kj", 1.0 / gb, rcs.grams())
    w = np.linalg.eigvalsh(S)
    if w[0] <= RANK_TOL * max(w[-1], 1e-300):
        return np.full(rcs.K, -math.inf)
    d = np.diagonal(inv_pd(S)).real
    return R / rcs.N - np.log2(d)


@dataclass
class CapacityReport:
    sum_capacity_sic: float
    user_capacities: np.ndarray
    sqinr: np.ndarray
    approx_sum: float
    cutset: float
    full_mi: float
    joint_mi_reduced: float


def evaluate(cs: ChannelSet, fb: FilterBank, R: float) -> CapacityReport:
    """All capacity figures for one realization, filter bank and rate."""
    rcs = reduce_channels(cs, fb)
    plan = uqn_plan(rcs, R)
    sqinr, caps = user_capacities_lmmse(rcs, plan.Delta)
    return CapacityReport(
        sum_capacity_sic=float(sum_capacity_sic(rcs, plan.Delta)),
        user_capacities=caps,
        sqinr=sqinr,
        approx_sum=fronthaul_limited_approx(rcs, R),
        cutset=cutset_bound(R, cs.L, cs),
        full_mi=full_mi(cs),
        joint_mi_reduced=joint_mi(cs, fb),
    )
