import numpy as np
import pytest

from fronthaul.errors import InvalidInputError
from fronthaul.scenario import (
    ChannelSet,
    Scenario,
    ScenarioConfig,
    draw_channels,
    error_variances,
    estimate_channels,
    generate_scenario,
    pathloss_db,
    power_control,
    stream,
)


def test_power_control_examples():
    np.testing.assert_allclose(power_control(np.ones((4, 3))), 1.0)
    np.testing.assert_allclose(power_control(np.array([[2.0], [1.0], [1.0], [0.0]])), [1.0])


def test_power_control_normalizes():
    cfg = ScenarioConfig()
    for t in range(1000):
        sc = generate_scenario(cfg, stream(3, t, "scenario"))
        np.testing.assert_allclose(sc.p * sc.beta.sum(axis=0) / cfg.L, 1.0, rtol=1e-12)


@pytest.mark.parametrize("d, db", [(1.0, 0.0), (10.0, -29.0), (100.0, -58.0), (0.2, 0.0)])
def test_pathloss(d, db):
    assert pathloss_db(d, ScenarioConfig()) == pytest.approx(db, abs=1e-12)


def _fixed_scenario(beta):
    L, K = beta.shape
    return Scenario(
        user_positions=np.zeros((K, 3)), rx_positions=np.zeros((L, 3)), beta=beta, p=power_control(beta)
    )


def test_channel_moments():
    rng = np.random.default_rng(1)
    beta = np.array([[0.5, 2.0], [1.5, 0.25]])
    sc = _fixed_scenario(beta)
    cfg = ScenarioConfig(K=2, L=2, M=1)
    draws = np.array([np.stack(draw_channels(sc, cfg, rng).H)[:, 0, :] for _ in range(100_000)])
    target = sc.p[None, :] * beta
    np.testing.assert_allclose(np.mean(np.abs(draws) ** 2, axis=0), target, rtol=0.02)
    n = len(draws)
    for l in range(2):
        x, y = draws[:, l, 0], draws[:, l, 1]
        se = np.sqrt(target[l, 0] * target[l, 1] / n)
        assert abs(np.mean(x * y.conj())) < 3 * se * np.sqrt(2)
        assert abs(np.mean(x)) < 3 * np.sqrt(target[l, 0] / n) * np.sqrt(2)


def test_streams_independent_and_reproducible():
    a = stream(7, 3, "fading").standard_normal(4)
    np.testing.assert_array_equal(a, stream(7, 3, "fading").standard_normal(4))
    assert not np.allclose(a, stream(7, 3, "pilot").standard_normal(4))
    assert not np.allclose(a, stream(7, 4, "fading").standard_normal(4))


def test_config_validation():
    with pytest.raises(InvalidInputError):
        ScenarioConfig(K=0)
    with pytest.warns(UserWarning):
        ScenarioConfig(K=8, L=2, M=2)


def test_perfect_pilots():
    cfg = ScenarioConfig()
    sc = generate_scenario(cfg, stream(0, 0, "scenario"))
    cs = draw_channels(sc, cfg, stream(0, 0, "fading"))
    est = estimate_channels(cs, sc, 1e12, stream(0, 0, "pilot"))
    H, Hh = cs.stacked(), np.stack(est.H_hat)
    assert np.linalg.norm(Hh - H) / np.linalg.norm(H) < 1e-4
    with pytest.raises(InvalidInputError):
        estimate_channels(cs, sc, 0.0, stream(0, 0, "pilot"))


def test_estimation_error_variance_and_orthogonality():
    # n single-antenna receivers with unit gains stand in for n independent draws
    n = 100_000
    sc = _fixed_scenario(np.ones((n, 1)))
    rng = np.random.default_rng(5)
    H = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    cs = ChannelSet(H=list(H.reshape(n, 1, 1)), rho=1.0)
    est = estimate_channels(cs, sc, 1.0, rng)
    h_hat = np.array(est.H_hat)[:, 0, 0]
    e = H - h_hat
    assert error_variances(sc, 1.0)[0, 0] == pytest.approx(0.5)
    assert np.mean(np.abs(e) ** 2) == pytest.approx(0.5, rel=0.02)
    corr = np.mean(h_hat * e.conj())
    assert abs(corr) < 3 * np.sqrt(0.5 * 0.5 / n) * np.sqrt(2)
    np.testing.assert_allclose(est.C[0], [[0.5]])
