import numpy as np
import pytest

from fronthaul.scenario import ChannelSet, ScenarioConfig, draw_channels, generate_scenario, stream


def random_channels(seed: int, trial: int = 0, **kw) -> ChannelSet:
    cfg = ScenarioConfig(seed=seed, **kw)
    sc = generate_scenario(cfg, stream(seed, trial, "scenario"))
    return draw_channels(sc, cfg, stream(seed, trial, "fading"))


def iid_channels(rng, L=4, M=8, K=8, rho=30.0) -> ChannelSet:
    H = (rng.standard_normal((L, M, K)) + 1j * rng.standard_normal((L, M, K))) / np.sqrt(2)
    return ChannelSet(H=list(H), rho=rho)


def random_hermitian(rng, n, psd=False):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return X @ X.conj().T if psd else X + X.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def accept():
    def record(cid: str, title: str, passed: bool, detail: str = "") -> bool:
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {cid} {title}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
