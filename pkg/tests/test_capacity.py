import numpy as np
import pytest

from fronthaul import capacity as cap
from fronthaul import compression as comp
from fronthaul import dimred
from fronthaul.scenario import ChannelSet

from conftest import iid_channels, random_channels
from test_compression import reduced


def test_sic_limits(rng):
    K, rho = 4, 7.0
    rcs = reduced([np.eye(K)], rho=rho)
    assert cap.sum_capacity_sic(rcs, [0.0]) == pytest.approx(K * np.log2(1 + rho))
    assert cap.sum_capacity_sic(rcs, [1e300]) == pytest.approx(0.0, abs=1e-12)
    cs = iid_channels(rng)
    fb = dimred.tcklt_bca(cs, 3)
    rcs = dimred.reduce_channels(cs, fb)
    assert cap.sum_capacity_sic(rcs, np.zeros(cs.L)) == pytest.approx(dimred.joint_mi(cs, fb), rel=1e-9)


def test_sic_batched(rng):
    cs = iid_channels(rng)
    rcs = dimred.reduce_channels(cs, dimred.tklt_bank(cs, 3))
    D = rng.uniform(0, 10, size=(5, 2, cs.L))
    out = cap.sum_capacity_sic(rcs, D)
    assert out.shape == (5, 2)
    assert out[3, 1] == pytest.approx(cap.sum_capacity_sic(rcs, D[3, 1]))


def _deep_regime(rng):
    cs = iid_channels(rng, rho=1e6)
    rcs = dimred.reduce_channels(cs, dimred.tcklt_bca(cs, 3))
    return cs, rcs


def test_fronthaul_limited_approx(rng):
    cs, rcs = _deep_regime(rng)
    a = cap.fronthaul_limited_approx(rcs, 30.0)
    assert cap.fronthaul_limited_approx(rcs, 33.0) - a == pytest.approx(cs.K, rel=1e-12)
    R = 30.0
    plan = comp.uqn_plan(rcs, R)
    assert plan.Delta.min() > 10 and (rcs.rho * rcs.gamma).min() > 100
    assert abs(cap.sum_capacity_sic(rcs, plan.Delta) - a) < 0.5 * cs.K


def test_fronthaul_limited_approx_unitary():
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((3, 3)) + 0j)
    rcs = reduced([Q], rho=10.0)
    assert cap.fronthaul_limited_approx(rcs, 6.0) == pytest.approx(6.0, abs=1e-9)
    assert cap.fronthaul_limited_approx(reduced([np.zeros((3, 3))]), 6.0) == -np.inf


def test_lmmse_detectors():
    g = 0.8 + 0.3j
    rcs = reduced([[[g]]], rho=2.5)
    B = cap.lmmse_detectors(rcs, [0.0])[0]
    assert B[0, 0] == pytest.approx(2.5 * np.conj(g) / (1 + 2.5 * abs(g) ** 2))
    tiny = reduced([[[g]]], rho=1e-12)
    assert abs(cap.lmmse_detectors(tiny, [0.0])[0][0, 0]) < 1e-11


def test_lmmse_unbiased_high_snr(rng):
    cs = iid_channels(rng, rho=1e6)
    rcs = dimred.reduce_channels(cs, dimred.tklt_bank(cs, 3))
    B = cap.lmmse_detectors(rcs, np.zeros(cs.L))
    S = sum(b @ G for b, G in zip(B, rcs.G))
    np.testing.assert_allclose(S, np.eye(cs.K), atol=1e-3)


def test_lmmse_single_user_equals_sic(rng):
    H = rng.standard_normal((2, 4, 1)) + 1j * rng.standard_normal((2, 4, 1))
    cs = ChannelSet(H=list(H), rho=3.0)
    rcs = dimred.reduce_channels(cs, dimred.tklt_bank(cs, 1))
    D = np.array([0.4, 2.0])
    _, c = cap.user_capacities_lmmse(rcs, D)
    assert c[0] == pytest.approx(cap.sum_capacity_sic(rcs, D), rel=1e-12)
    sq, c = cap.user_capacities_lmmse(rcs, np.full(2, 1e300))
    assert sq[0] < 1e-200 and c[0] < 1e-200


def test_lmmse_below_sic():
    rng = np.random.default_rng(17)
    for t in range(1000):
        cs = random_channels(17, t, rho_db=rng.uniform(0, 30))
        fb = dimred.tcklt_bca(cs, 2 + t % 3)
        rcs = dimred.reduce_channels(cs, fb)
        D = 10 ** rng.uniform(-2, 3, size=cs.L)
        _, c = cap.user_capacities_lmmse(rcs, D)
        assert c.sum() <= cap.sum_capacity_sic(rcs, D) + 1e-9


def test_cutset_limits(rng):
    cs = iid_channels(rng)
    assert cap.cutset_bound(1e9, cs.L, cs) == pytest.approx(dimred.full_mi(cs))
    big = cs.with_rho(1e30)
    assert cap.cutset_bound(12.0, cs.L, big) == 48.0


def test_imperfect_bound(rng):
    cs = iid_channels(rng)
    rcs = dimred.reduce_channels(cs, dimred.tcklt_bca(cs, 3))
    zero = [np.zeros((3, 3))] * cs.L
    assert cap.sum_capacity_imperfect(rcs, zero) == pytest.approx(cap.sum_capacity_sic(rcs, np.zeros(cs.L)))
    plan = comp.heuristic_plan(rcs, 9.0)
    base = cap.sum_capacity_imperfect(rcs, plan.Phi)
    assert cap.sum_capacity_imperfect(rcs, [2 * P for P in plan.Phi]) < base
    # exact UQN plan through the covariance form reproduces the SIC value
    uqn = comp.uqn_plan(rcs, 9.0)
    assert cap.sum_capacity_imperfect(rcs, uqn) == pytest.approx(cap.sum_capacity_sic(rcs, uqn.Delta), rel=1e-9)


def test_lmmse_user_rate_approx(rng):
    cs, rcs = _deep_regime(rng)
    a = cap.lmmse_user_rate_approx(rcs, 30.0)
    np.testing.assert_allclose(cap.lmmse_user_rate_approx(rcs, 33.0) - a, 1.0)
    _, exact = cap.user_capacities_lmmse(rcs, comp.uqn_plan(rcs, 30.0).Delta)
    assert np.abs(exact - a).max() < 0.5
    rcs = reduced([np.diag([2.0, 2.0])], rho=100.0)
    r = cap.lmmse_user_rate_approx(rcs, 8.0)
    assert r[0] == pytest.approx(r[1])


def test_evaluate_report(rng):
    cs = random_channels(0, 1)
    rep = cap.evaluate(cs, dimred.tcklt_bca(cs, 2), 10.0)
    assert rep.sum_capacity_sic <= rep.cutset + 1e-9
    assert rep.user_capacities.sum() <= rep.sum_capacity_sic + 1e-9
    assert rep.joint_mi_reduced <= rep.full_mi + 1e-9
