"""Per-receiver compression of the reduced signals.

The fronthaul budget ``R`` at receiver ``l`` is spent by transform coding:
decorrelate with the eigenvectors ``V_l`` of ``G_l G_l^H``, then compress
each of the ``N`` scalars with its own rate. Under uniform quantization
noise (UQN) every component ends up with the same noise variance
``Delta_l``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .dimred import ReducedChannelSet
from .errors import ConvergenceError, InvalidInputError
from .numerics import bisect_monotone, bisect_monotone_batch, crandn

WIDEN_STEPS = 64
DELTA_FLOOR = 1e-12
# ten times tighter than the 1e-9 residual target so recomputed residuals keep margin
UQN_TOL = 1e-10


def uqn_rate(sigma2: np.ndarray, delta) -> np.ndarray | float:
    """Fronthaul rate ``sum_i log2(1 + sigma2_i / delta)`` (broadcasts over delta)."""
    sigma2 = np.asarray(sigma2, dtype=float)
    delta = np.asarray(delta, dtype=float)
    out = np.sum(np.log2(1.0 + sigma2 / delta[..., None]), axis=-1)
    return float(out) if out.ndim == 0 else out


def _bracket(sigma2: np.ndarray, R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bracket ``[lo, hi]`` for the UQN level, widened by doubling as needed."""
    lo = np.full(R.shape, DELTA_FLOOR)
    hi = np.sum(sigma2, axis=-1) * np.exp2(np.minimum(R, 1000.0))
    for _ in range(WIDEN_STEPS):
        bad = uqn_rate(sigma2, hi) > R
        if not np.any(bad):
            break
        hi = np.where(bad, 2.0 * hi, hi)
    for _ in range(WIDEN_STEPS):
        bad = uqn_rate(sigma2, lo) < R
        if not np.any(bad):
            break
        lo = np.where(bad, 0.5 * lo, lo)
    else:
        raise ConvergenceError("could not bracket the quantization noise level")
    return lo, hi


def uqn_delta(sigma2, R: float, tol: float = UQN_TOL) -> float:
    """Noise level ``Delta`` with ``sum_i log2(1 + sigma2_i/Delta) = R``."""
    if not R > 0:
        raise InvalidInputError(f"fronthaul rate must be positive, got {R}")
    sigma2 = np.asarray(sigma2, dtype=float)
    lo, hi = _bracket(sigma2[None, :], np.array([R]))
    return bisect_monotone(
        lambda d: uqn_rate(sigma2, d), R, float(lo[0]), float(hi[0]), tol=tol, geometric=True
    )


def uqn_delta_batch(sigma2: np.ndarray, R: np.ndarray, tol: float = UQN_TOL) -> np.ndarray:
    """Vectorized :func:`uqn_delta`.

    ``sigma2`` has shape ``(..., N)`` and ``R`` broadcasts against
    ``sigma2.shape[:-1]``; the result has the broadcast shape.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    R = np.asarray(R, dtype=float)
    shape = np.broadcast_shapes(sigma2.shape[:-1], R.shape)
    sigma2 = np.broadcast_to(sigma2, shape + sigma2.shape[-1:]).reshape(-1, sigma2.shape[-1])
    R = np.broadcast_to(R, shape).reshape(-1)
    if np.any(R <= 0):
        raise InvalidInputError("fronthaul rates must be positive")
    lo, hi = _bracket(sigma2, R)
    delta = bisect_monotone_batch(
        lambda d: uqn_rate(sigma2, d), R, lo, hi, tol=tol, geometric=True
    )
    return delta.reshape(shape)


def component_variances(rcs: ReducedChannelSet) -> np.ndarray:
    """Variances ``rho gamma_li + 1`` of the decorrelated components, ``(L, N)``."""
    return rcs.rho * rcs.gamma + 1.0


def solve_uqn_delta(rcs: ReducedChannelSet, l: int, R: float) -> float:
    return uqn_delta(component_variances(rcs)[l], R)


def approx_uqn_delta(rcs: ReducedChannelSet, l: int, R: float) -> float:
    """High-SNR noise level ``rho * gamma_bar_l * 2^(-R/N)``."""
    return float(rcs.rho * rcs.gamma_bar[l] * 2.0 ** (-R / rcs.N))


def exact_rate_allocation(rcs: ReducedChannelSet, l: int, delta: float) -> np.ndarray:
    return np.log2(1.0 + component_variances(rcs)[l] / delta)


def approx_rate_allocation(gammas, R: float) -> tuple[np.ndarray, bool]:
    """Log-eigenvalue rate split, re-spread over the active set when negative.

    Returns the rates and whether any component had to be clamped to zero.
    """
    g = np.asarray(gammas, dtype=float)
    with np.errstate(divide="ignore"):
        lg = np.log2(g)
    active = np.isfinite(lg)
    clamped = not active.all()
    rates = np.zeros_like(g)
    while active.any():
        n = active.sum()
        r = R / n + lg - lg[active].mean()
        neg = active & (r < 0)
        if not neg.any():
            rates[active] = r[active]
            break
        active &= ~neg
        clamped = True
    return rates, clamped


def approx_rate_allocation_batch(gammas: np.ndarray, R: np.ndarray) -> np.ndarray:
    """:func:`approx_rate_allocation` for every receiver and every rate at once.

    ``gammas`` is ``(L, N)``, ``R`` is ``(nR,)``; returns rates ``(nR, L, N)``.
    """
    g = np.asarray(gammas, dtype=float)
    R = np.asarray(R, dtype=float)
    with np.errstate(divide="ignore"):
        lg = np.broadcast_to(np.log2(g), (R.size,) + g.shape)
    active = np.isfinite(lg).copy()
    rates = np.zeros(lg.shape)
    lg0 = np.where(active, lg, 0.0)
    for _ in range(g.shape[-1] + 1):
        n = active.sum(axis=-1, keepdims=True)
        mean = np.where(n > 0, (lg0 * active).sum(axis=-1, keepdims=True) / np.maximum(n, 1), 0.0)
        r = R[:, None, None] / np.maximum(n, 1) + lg0 - mean
        neg = active & (r < 0)
        rates = np.where(active, r, 0.0)
        if not neg.any():
            break
        active &= ~neg
    return rates


@dataclass
class CompressionPlan:
    """Transform-coding plan for every receiver at fronthaul rate ``R``.

    ``phi`` holds the per-component quantization noise variances in the
    ``V_l`` basis; components with zero rate are erased (reconstructed as
    their mean) and carry ``phi = 0`` together with ``erased = True``.
    """

    R: float
    Delta: np.ndarray  # (L,)
    V: list[np.ndarray]
    rates: np.ndarray  # (L, N)
    sigma2: np.ndarray  # (L, N)
    phi: np.ndarray  # (L, N)
    erased: np.ndarray  # (L, N) bool

    @property
    def Phi(self) -> list[np.ndarray]:
        return [(V * p) @ V.conj().T for V, p in zip(self.V, self.phi)]

    def precision(self, l: int) -> np.ndarray:
        """``(I + Phi_l)^{-1}`` restricted to non-erased components."""
        w = np.where(self.erased[l], 0.0, 1.0 / (1.0 + self.phi[l]))
        V = self.V[l]
        return (V * w) @ V.conj().T


def noise_from_rates(sigma2: np.ndarray, rates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Test-channel noise ``sigma2 / (2^r - 1)`` and the erased (zero-rate) mask."""
    erased = rates <= 0
    with np.errstate(over="ignore", divide="ignore"):
        phi = np.where(erased, 0.0, sigma2 / np.expm1(np.log(2.0) * np.where(erased, 1.0, rates)))
    return phi, erased


def uqn_plan(rcs: ReducedChannelSet, R: float) -> CompressionPlan:
    """Exact UQN plan: solve ``Delta_l`` per receiver, rates from the test channel."""
    sigma2 = component_variances(rcs)
    delta = uqn_delta_batch(sigma2, np.full(rcs.L, float(R)))
    rates = np.log2(1.0 + sigma2 / delta[:, None])
    phi, erased = noise_from_rates(sigma2, rates)
    return CompressionPlan(
        R=float(R), Delta=delta, V=rcs.V, rates=rates, sigma2=sigma2, phi=phi, erased=erased
    )


def imperfect_quant_covariance(rcs_hat: ReducedChannelSet, l: int, rates, sigma2) -> np.ndarray:
    """``V_l diag(sigma2_i / (2^{r_i} - 1)) V_l^H`` with zero-rate components erased."""
    phi, _ = noise_from_rates(np.asarray(sigma2, float), np.asarray(rates, float))
    V = rcs_hat.V[l]
    return (V * phi) @ V.conj().T


def heuristic_plan(
    rcs_hat: ReducedChannelSet,
    R: float,
    sigma2: np.ndarray | None = None,
    allocation: str = "approx",
) -> CompressionPlan:
    """Transform coding driven by estimated eigenvalues.

    ``allocation="approx"`` splits ``R`` by the log-eigenvalue rule;
    ``"exact"`` solves the UQN level from the estimated spectrum and uses the
    test-channel rates. ``sigma2`` are the variances assumed known at the
    quantizers (default ``rho * gamma_hat + 1``).
    """
    gam = rcs_hat.gamma
    nominal = rcs_hat.rho * gam + 1.0
    sigma2 = nominal if sigma2 is None else np.asarray(sigma2, dtype=float)
    delta = uqn_delta_batch(nominal, np.full(rcs_hat.L, float(R)))
    if allocation == "approx":
        rates = np.array([approx_rate_allocation(g, R)[0] for g in gam])
    elif allocation == "exact":
        rates = np.log2(1.0 + nominal / delta[:, None])
    else:
        raise InvalidInputError(f"unknown allocation {allocation!r}")
    phi, erased = noise_from_rates(sigma2, rates)
    return CompressionPlan(
        R=float(R), Delta=delta, V=rcs_hat.V, rates=rates, sigma2=sigma2, phi=phi, erased=erased
    )


def quantize_gaussian_model(z_l: np.ndarray, plan: CompressionPlan, l: int, rng) -> np.ndarray:
    """Pass ``z_l`` through the Gaussian forward test channel of ``plan``.

    ``z_l`` is a length-``N`` vector or an ``(N, T)`` block of samples.
    """
    V = plan.V[l]
    u = V.conj().T @ z_l
    phi = plan.phi[l]
    shape = u.shape
    noise_var = phi if u.ndim == 1 else phi[:, None]
    u = u + crandn(rng, shape, np.broadcast_to(noise_var, shape))
    keep = ~plan.erased[l]
    u = u * (keep if u.ndim == 1 else keep[:, None])
    return V @ u


# Lloyd-Max scalar quantization of a real Gaussian

LLOYD_REL_TOL = 1e-10
LLOYD_MAX_ITER = 100_000


def _phi(x):
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def _cell_moments(t: np.ndarray):
    """Probability, first and second partial moments of N(0,1) on each cell."""
    P = np.diff(ndtr(t))
    pdf = _phi(t)
    m1 = -np.diff(pdf)
    fin = np.isfinite(t)
    tp = np.zeros_like(t)
    tp[fin] = t[fin] * pdf[fin]
    m2 = P - np.diff(tp)
    return P, m1, m2


@dataclass(frozen=True)
class Codebook:
    levels: np.ndarray
    thresholds: np.ndarray  # inner decision boundaries, len(levels) - 1
    variance: float
    mse: float
    iterations: int

    @property
    def rate_bits(self) -> int:
        return int(np.log2(len(self.levels)))

    def quantize(self, x: np.ndarray) -> np.ndarray:
        return self.levels[np.searchsorted(self.thresholds, x)]


def lloyd_max_codebook(rate_bits: int, variance: float = 1.0) -> Codebook:
    """Fixed-rate MMSE quantizer for ``N(0, variance)`` by Lloyd iteration.

    Starts from equiprobable cells and alternates centroid / midpoint updates
    until the relative MSE change falls below 1e-10. Cell moments are exact
    Gaussian integrals, so no sampling is involved.
    """
    if int(rate_bits) != rate_bits or not 1 <= rate_bits <= 8:
        raise InvalidInputError(f"rate_bits must be an integer in [1, 8], got {rate_bits}")
    if not variance > 0:
        raise InvalidInputError("variance must be positive")
    n = 2 ** int(rate_bits)
    t = ndtri(np.linspace(0.0, 1.0, n + 1))
    prev = np.inf
    for it in range(1, LLOYD_MAX_ITER + 1):
        P, m1, m2 = _cell_moments(t)
        c = m1 / P
        mse = float(np.sum(m2 - 2 * c * m1 + c * c * P))
        if abs(prev - mse) <= LLOYD_REL_TOL * mse:
            break
        prev = mse
        t = np.concatenate([[-np.inf], 0.5 * (c[1:] + c[:-1]), [np.inf]])
    else:
        raise ConvergenceError("Lloyd iteration did not converge")
    s = np.sqrt(variance)
    return Codebook(
        levels=c * s, thresholds=t[1:-1] * s, variance=float(variance), mse=mse * variance,
        iterations=it,
    )


def lloyd_max_quantize_complex(z: np.ndarray, rate_bits: int, variance: float) -> np.ndarray:
    """Quantize real and imaginary parts separately at half the complex variance."""
    cb = lloyd_max_codebook(rate_bits, variance / 2.0)
    return cb.quantize(z.real) + 1j * cb.quantize(z.imag)


def gaussian_rd_distortion(rate_bits: float, variance: float = 1.0) -> float:
    """Rate-distortion bound ``variance * 2^(-2 r)`` for a real Gaussian."""
    return variance * 2.0 ** (-2.0 * rate_bits)
