"""Network geometry, large-scale fading, power control and channel draws."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .numerics import crandn

D0 = 1.0  # reference / clamp distance in metres

# purpose tags for per-trial random streams; never renumber
STREAM_TAGS = {
    "scenario": 0,
    "fading": 1,
    "pilot": 2,
    "quantizer": 3,
    "competitor": 4,
}


def stream(seed: int, trial: int, purpose: str) -> np.random.Generator:
    """Independent generator keyed by ``(seed, trial, purpose)``.

    Any trial can be regenerated in isolation, whatever order or process the
    trials are executed in.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial), STREAM_TAGS[purpose]))
    return np.random.default_rng(ss)


@dataclass
class ScenarioConfig:
    K: int = 8
    L: int = 4
    M: int = 8
    area_side: float = 200.0
    user_height: float = 1.0
    rx_height: float = 6.0
    pathloss_exponent: float = 2.9
    shadow_sigma_db: float = 5.7
    rho_db: float = 15.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("K", "L", "M"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {v}")
        if self.area_side <= 0:
            raise InvalidInputError("area_side must be positive")
        if self.shadow_sigma_db < 0:
            raise InvalidInputError("shadow_sigma_db must be non-negative")
        if self.M * self.L < self.K:
            warnings.warn(
                f"M*L={self.M * self.L} < K={self.K}: fewer receive antennas than users",
                stacklevel=3,
            )

    @property
    def rho(self) -> float:
        return 10.0 ** (self.rho_db / 10.0)


@dataclass
class Scenario:
    user_positions: np.ndarray  # (K, 3)
    rx_positions: np.ndarray  # (L, 3)
    beta: np.ndarray  # (L, K) linear large-scale gains
    p: np.ndarray  # (K,) power control coefficients

    @property
    def L(self) -> int:
        return self.beta.shape[0]

    @property
    def K(self) -> int:
        return self.beta.shape[1]


@dataclass
class ChannelSet:
    """Power-control adjusted channels ``H_l`` (each ``M x K``) and linear SNR."""

    H: list[np.ndarray]
    rho: float

    @property
    def L(self) -> int:
        return len(self.H)

    @property
    def M(self) -> int:
        return self.H[0].shape[0]

    @property
    def K(self) -> int:
        return self.H[0].shape[1]

    def stacked(self) -> np.ndarray:
        return np.stack(self.H)

    def with_rho(self, rho: float) -> "ChannelSet":
        return ChannelSet(H=self.H, rho=rho)


@dataclass
class EstimatedChannelSet:
    """MMSE channel estimates with their aggregate error covariances.

    ``H_true`` keeps the realized channels for genie-aided evaluation.
    """

    H_hat: list[np.ndarray]
    C: list[np.ndarray]
    rho_pl: float
    rho: float
    H_true: list[np.ndarray] = field(repr=False)

    @property
    def L(self) -> int:
        return len(self.H_hat)

    def as_channel_set(self) -> ChannelSet:
        return ChannelSet(H=self.H_hat, rho=self.rho)


def pathloss_db(distance_m, cfg: ScenarioConfig):
    """Log-distance path loss in dB (negative), shadowing excluded."""
    d = np.maximum(np.asarray(distance_m, dtype=float), D0)
    out = -10.0 * cfg.pathloss_exponent * np.log10(d / D0)
    return float(out) if np.ndim(out) == 0 else out


def power_control(beta: np.ndarray) -> np.ndarray:
    """Equal average received power per user: ``p_k = L / sum_l beta_lk``."""
    beta = np.asarray(beta, dtype=float)
    return beta.shape[0] / beta.sum(axis=0)


def generate_scenario(cfg: ScenarioConfig, rng: np.random.Generator) -> Scenario:
    K, L = cfg.K, cfg.L
    users = np.column_stack(
        [rng.uniform(0.0, cfg.area_side, size=(K, 2)), np.full(K, cfg.user_height)]
    )
    rxs = np.column_stack(
        [rng.uniform(0.0, cfg.area_side, size=(L, 2)), np.full(L, cfg.rx_height)]
    )
    dist = np.linalg.norm(rxs[:, None, :] - users[None, :, :], axis=-1)
    shadow_db = rng.normal(0.0, cfg.shadow_sigma_db, size=(L, K))
    beta = 10.0 ** ((pathloss_db(dist, cfg) + shadow_db) / 10.0)
    return Scenario(user_positions=users, rx_positions=rxs, beta=beta, p=power_control(beta))


def draw_channels(sc: Scenario, cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelSet:
    """One Rayleigh realization; column ``k`` of ``H_l`` is ``sqrt(p_k) h_lk``."""
    L, K, M = sc.L, sc.K, cfg.M
    var = sc.p[None, None, :] * sc.beta[:, None, :]  # (L, 1, K)
    H = crandn(rng, (L, M, K), var)
    return ChannelSet(H=list(H), rho=cfg.rho)


def estimate_channels(
    cs: ChannelSet, sc: Scenario, rho_pl: float, rng: np.random.Generator
) -> EstimatedChannelSet:
    """Per-antenna scalar MMSE estimates from one orthogonal pilot per user.

    Pilots are sent with the same power-control coefficient as data, so the
    quantity estimated is the effective channel ``sqrt(p_k) h_lk`` with prior
    variance ``v = p_k beta_lk`` and pilot observation ``sqrt(rho_pl) g + n``.
    The error covariance is ``v / (1 + rho_pl v) I_M``.
    """
    if not rho_pl > 0:
        raise InvalidInputError(f"pilot SNR must be positive, got {rho_pl}")
    L, M, K = cs.L, cs.M, cs.K
    v = sc.p[None, :] * sc.beta  # (L, K)
    H = cs.stacked()
    if np.isinf(rho_pl):
        H_hat = H.copy()
        err_var = np.zeros_like(v)
    else:
        y = np.sqrt(rho_pl) * H + crandn(rng, (L, M, K))
        gain = np.sqrt(rho_pl) * v / (1.0 + rho_pl * v)
        H_hat = gain[:, None, :] * y
        err_var = v / (1.0 + rho_pl * v)
    C = [np.eye(M) * err_var[l].sum() for l in range(L)]
    return EstimatedChannelSet(
        H_hat=list(H_hat), C=C, rho_pl=rho_pl, rho=cs.rho, H_true=list(H)
    )


def error_variances(sc: Scenario, rho_pl: float) -> np.ndarray:
    """Per-(l, k) per-antenna MMSE error variance, shape ``(L, K)``."""
    v = sc.p[None, :] * sc.beta
    if np.isinf(rho_pl):
        return np.zeros_like(v)
    return v / (1.0 + rho_pl * v)
