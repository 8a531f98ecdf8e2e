"""Quick invariant checks runnable from the command line."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import capacity as cap
from . import compression as comp
from . import dimred
from .numerics import bisect_monotone, hermitian_eig, log2det_eye_plus, random_orthonormal
from .scenario import ScenarioConfig, draw_channels, generate_scenario, stream


def _random_channels(rng, seed: int, trial: int, rho_db: float = 15.0):
    cfg = ScenarioConfig(rho_db=rho_db, seed=seed)
    sc = generate_scenario(cfg, stream(seed, trial, "scenario"))
    return draw_channels(sc, cfg, stream(seed, trial, "fading"))


def check_eig(rng, n: int) -> bool:
    for _ in range(n):
        X = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        A = X + X.conj().T
        e = hermitian_eig(A)
        if np.abs(e.reconstruct() - A).max() > 1e-10 * max(1.0, np.abs(A).max()):
            return False
        if np.any(np.diff(e.eigenvalues) > 0):
            return False
    return True


def check_chain_rule(rng, n: int, seed: int) -> bool:
    for t in range(n):
        cs = _random_channels(rng, seed, t)
        fb = dimred.tklt_bank(cs, 3)
        total = dimred.joint_mi(cs, fb)
        for l in range(cs.L):
            rest = [W if i != l else np.zeros_like(W) for i, W in enumerate(fb.W)]
            if abs(dimred.conditional_mi(l, cs, fb) + dimred.joint_mi(cs, rest) - total) > 1e-9 * total:
                return False
    return True


def check_poincare(rng, n: int) -> bool:
    X = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    H = X / np.sqrt(2)
    rho = 30.0
    W = dimred.tklt(H, 3)
    best = log2det_eye_plus(rho * W.conj().T @ H @ H.conj().T @ W)
    for _ in range(n):
        Wr = random_orthonormal(rng, 8, 3)
        if log2det_eye_plus(rho * Wr.conj().T @ H @ H.conj().T @ Wr) > best + 1e-9:
            return False
    return True


def check_delta_residuals(rng, n: int, seed: int) -> bool:
    for t in range(n):
        cs = _random_channels(rng, seed, t)
        rcs = dimred.reduce_channels(cs, dimred.tcklt_bca(cs, 3))
        for R in (0.5, 4.0, 20.0, 60.0):
            plan = comp.uqn_plan(rcs, R)
            res = comp.uqn_rate(comp.component_variances(rcs), plan.Delta) - R
            if np.abs(res).max() > 1e-9:
                return False
    return True


def check_bisection(rng, n: int) -> bool:
    x = bisect_monotone(lambda d: math.log2(1 + 16 / d), 4.0, 1e-9, 1e6)
    return abs(x - 16 / 15) < 1e-6


def check_bca_monotone(rng, n: int, seed: int) -> bool:
    for t in range(n):
        cs = _random_channels(rng, seed, t)
        fb = dimred.tcklt_bca(cs, 2, j_max=5, rel_tol=0.0)
        if np.any(np.diff(fb.trace) < -1e-9 * max(fb.trace)):
            return False
    return True


def check_bounds(rng, n: int, seed: int) -> bool:
    for t in range(n):
        cs = _random_channels(rng, seed, t)
        fb = dimred.tcklt_bca(cs, 2)
        for R in (2.0, 10.0, 30.0):
            rep = cap.evaluate(cs, fb, R)
            if rep.sum_capacity_sic > min(cs.L * R, rep.full_mi) + 1e-9:
                return False
            if rep.user_capacities.sum() > rep.sum_capacity_sic + 1e-9:
                return False
    return True


def check_lloyd_max(rng, n: int) -> bool:
    cb = comp.lloyd_max_codebook(1)
    ok = abs(cb.mse - (1 - 2 / np.pi)) < 1e-6
    for b in range(1, 9):
        ok &= comp.lloyd_max_codebook(b).mse >= comp.gaussian_rd_distortion(b)
    return bool(ok)


def run_selftest(n: int = 50, seed: int = 12345) -> list[tuple[str, bool]]:
    rng = np.random.default_rng(seed)
    suites: list[tuple[str, Callable[[], bool]]] = [
        ("hermitian eigendecomposition", lambda: check_eig(rng, n)),
        ("conditional MI chain rule", lambda: check_chain_rule(rng, max(n // 5, 1), seed)),
        ("Poincare optimality of T-KLT", lambda: check_poincare(rng, 10 * n)),
        ("UQN level residuals", lambda: check_delta_residuals(rng, max(n // 5, 1), seed)),
        ("bisection closed form", lambda: check_bisection(rng, n)),
        ("BCA monotone ascent", lambda: check_bca_monotone(rng, max(n // 5, 1), seed)),
        ("capacity bound ordering", lambda: check_bounds(rng, max(n // 5, 1), seed)),
        ("Lloyd-Max quantizer", lambda: check_lloyd_max(rng, n)),
    ]
    results = []
    for name, fn in suites:
        try:
            results.append((name, bool(fn())))
        except Exception as exc:  # a crashing suite is a failing suite
            results.append((f"{name} ({type(exc).__name__}: {exc})", False))
    return results
