"""Monte-Carlo experiment engine.

Every trial draws its own scenario and channels from random streams keyed by
``(seed, trial, purpose)``, so results do not depend on worker count or
scheduling. Trials are independent work units; aggregation always runs over
trial results sorted by trial index.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import subprocess
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import capacity as cap
from . import compression as comp
from . import dimred
from . import imperfect_csi as icsi
from .errors import ConfigError, FronthaulError
from .numerics import log2det_eye_plus
from .scenario import ScenarioConfig, draw_channels, estimate_channels, generate_scenario, stream

log = logging.getLogger(__name__)

BOUND_SLACK = 1e-9
DETECTIONS = ("SIC", "LMMSE")


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    rate_grid: list[float] = field(default_factory=lambda: [float(r) for r in range(2, 41, 2)])
    N_policy: Any = "auto"  # an int, a list of ints, or "auto"
    methods: list[str] = field(default_factory=lambda: [dimred.TCKLT, dimred.NONE])
    detection: str = "SIC"
    trials: int = 500
    rho_pl_db: list[float] | None = None
    output_path: str = "results"
    j_max: int = 3
    sweeps: int = 20  # outer sweeps recorded by the convergence experiment
    rho_db_grid: list[float] = field(default_factory=lambda: [float(r) for r in range(0, 31, 5)])
    allocation: str = "approx"  # rate split used with estimated CSI
    genie: bool = False

    def __post_init__(self):
        if isinstance(self.scenario, dict):
            self.scenario = ScenarioConfig(**self.scenario)
        self.validate()

    def validate(self) -> None:
        if not self.rate_grid:
            raise ConfigError("rate_grid must be non-empty")
        grid = [float(r) for r in self.rate_grid]
        if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] <= 0:
            raise ConfigError("rate_grid must be positive and strictly ascending")
        self.rate_grid = grid
        if self.rho_pl_db is not None:
            self.rho_pl_db = [float(x) for x in self.rho_pl_db]
        self.rho_db_grid = [float(x) for x in self.rho_db_grid]
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        for m in self.methods:
            if m not in dimred.METHODS:
                raise ConfigError(f"unknown method {m!r}; expected one of {dimred.METHODS}")
        if self.detection not in DETECTIONS:
            raise ConfigError(f"detection must be one of {DETECTIONS}")
        if self.allocation not in ("approx", "exact"):
            raise ConfigError("allocation must be 'approx' or 'exact'")
        self.candidate_Ns()

    def candidate_Ns(self) -> list[int]:
        sc = self.scenario
        lo, hi = dimred.n_bounds(sc.K, sc.L, sc.M)
        pol = self.N_policy
        if pol == "auto":
            return list(range(lo, hi + 1))
        Ns = [int(pol)] if isinstance(pol, (int, float)) else [int(n) for n in pol]
        for n in Ns:
            if not lo <= n <= hi:
                raise ConfigError(f"N={n} outside admissible range [{lo}, {hi}]")
        return Ns


@dataclass
class ResultRow:
    method: str
    R: float
    N_used: int
    rho_db: float
    rho_pl_db: float | None
    mean_sum_capacity: float
    mean_user_capacity: float
    outage5_user_capacity: float
    cutset: float
    full_mi: float
    trials: int
    seed: int


RESULT_FIELDS = [f.name for f in dataclasses.fields(ResultRow)]


# -- trial execution ---------------------------------------------------------

def run_trials(fn: Callable[[int], Any], trials: int, workers: int = 1) -> list[Any]:
    """Evaluate ``fn(trial)`` for every trial index, results in index order."""
    idx = list(range(trials))
    if workers <= 1:
        return [fn(i) for i in idx]
    chunk = max(1, trials // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, idx, chunksize=chunk))


def _draw(cfg: ExperimentConfig, trial: int):
    sc_cfg = cfg.scenario
    sc = generate_scenario(sc_cfg, stream(sc_cfg.seed, trial, "scenario"))
    cs = draw_channels(sc, sc_cfg, stream(sc_cfg.seed, trial, "fading"))
    return sc, cs


@dataclass
class Curve:
    """Per-trial curves for one (method, N) over the rate grid."""

    sic: np.ndarray  # (R,)
    users: np.ndarray  # (R, K) LMMSE user capacities
    min_delta: np.ndarray  # (R,) smallest Delta_l over receivers
    joint_mi: float


@dataclass
class SweepTrial:
    trial: int
    ok: bool
    curves: dict[tuple[str, int], Curve] = field(default_factory=dict)
    full_mi: float = math.nan
    error: str = ""


def _curve(cs, fb, R: np.ndarray) -> Curve:
    rcs = dimred.reduce_channels(cs, fb)
    sigma2 = comp.component_variances(rcs)
    Delta = comp.uqn_delta_batch(sigma2[None, :, :], R[:, None])  # (R, L)
    _, users = cap.user_capacities_lmmse(rcs, Delta)
    return Curve(
        sic=np.asarray(cap.sum_capacity_sic(rcs, Delta)),
        users=users,
        min_delta=Delta.min(axis=1),
        joint_mi=dimred.joint_mi(cs, fb),
    )


def sweep_trial(cfg: ExperimentConfig, trial: int) -> SweepTrial:
    R = np.asarray(cfg.rate_grid)
    try:
        _, cs = _draw(cfg, trial)
        out = SweepTrial(trial=trial, ok=True, full_mi=dimred.full_mi(cs))
        for m in cfg.methods:
            Ns = [cs.M] if m == dimred.NONE else cfg.candidate_Ns()
            for N in Ns:
                fb = dimred.design_filters(cs, m, N, j_max=cfg.j_max)
                out.curves[(m, N)] = _curve(cs, fb, R)
        return out
    except (FronthaulError, np.linalg.LinAlgError) as exc:
        return SweepTrial(trial=trial, ok=False, error=f"{type(exc).__name__}: {exc}")


@dataclass
class SweepResult:
    rows: list[ResultRow]
    trials: list[SweepTrial]
    failures: int
    violations: list[str]

    def ok_trials(self) -> list[SweepTrial]:
        return [t for t in self.trials if t.ok]

    def stack(self, key: tuple[str, int], attr: str) -> np.ndarray:
        return np.stack([np.asarray(getattr(t.curves[key], attr)) for t in self.ok_trials()])


def _check_bounds(cfg: ExperimentConfig, results: list[SweepTrial]) -> list[str]:
    R = np.asarray(cfg.rate_grid)
    L = cfg.scenario.L
    bad = []
    for t in results:
        if not t.ok:
            continue
        cut = np.minimum(L * R, t.full_mi)
        for key, c in t.curves.items():
            if np.any(c.sic > cut + BOUND_SLACK):
                bad.append(f"trial {t.trial} {key}: SIC above cut-set bound")
            if np.any(c.users.sum(axis=1) > c.sic + BOUND_SLACK):
                bad.append(f"trial {t.trial} {key}: LMMSE sum above SIC")
    return bad


def _row(cfg, method, R, N, sums, users, cutset, fmi, n, rho_pl_db=None) -> ResultRow:
    return ResultRow(
        method=method,
        R=float(R),
        N_used=int(N),
        rho_db=float(cfg.scenario.rho_db),
        rho_pl_db=rho_pl_db,
        mean_sum_capacity=float(np.mean(sums)),
        mean_user_capacity=float(np.mean(users)),
        outage5_user_capacity=float(np.percentile(users, 5)),
        cutset=float(cutset),
        full_mi=float(fmi),
        trials=int(n),
        seed=int(cfg.scenario.seed),
    )


def _sum_metric(cfg, curve_sic: np.ndarray, curve_users: np.ndarray) -> np.ndarray:
    return curve_sic if cfg.detection == "SIC" else curve_users.sum(axis=-1)


def aggregate_sweep(cfg: ExperimentConfig, results: list[SweepTrial]) -> SweepResult:
    ok = [t for t in results if t.ok]
    failures = len(results) - len(ok)
    if failures:
        log.warning("%d of %d trials failed and were excluded", failures, len(results))
    rows: list[ResultRow] = []
    if not ok:
        return SweepResult(rows=rows, trials=results, failures=failures, violations=[])
    R = np.asarray(cfg.rate_grid)
    n = len(ok)
    fmi = np.array([t.full_mi for t in ok])
    cut = np.minimum(cfg.scenario.L * R[None, :], fmi[:, None]).mean(axis=0)
    fmi_mean = fmi.mean()
    for m in cfg.methods:
        Ns = sorted({N for (mm, N) in ok[0].curves if mm == m})
        sums = {N: np.stack([_sum_metric(cfg, t.curves[(m, N)].sic, t.curves[(m, N)].users) for t in ok]) for N in Ns}
        users = {N: np.stack([t.curves[(m, N)].users for t in ok]) for N in Ns}
        for N in Ns:
            for i, r in enumerate(R):
                rows.append(_row(cfg, m, r, N, sums[N][:, i], users[N][:, i], cut[i], fmi_mean, n))
        if len(Ns) > 1:
            S = np.stack([sums[N] for N in Ns])  # (nN, trials, R)
            U = np.stack([users[N] for N in Ns])  # (nN, trials, R, K)
            curve_best = np.argmax(S.mean(axis=1), axis=0)  # (R,)
            trial_best = np.argmax(S, axis=0)  # (trials, R)
            for i, r in enumerate(R):
                b = curve_best[i]
                rows.append(_row(cfg, f"{m}+env", r, Ns[b], S[b, :, i], U[b, :, i], cut[i], fmi_mean, n))
                tb = trial_best[:, i]
                pick = np.arange(n)
                modal = Counter(tb.tolist()).most_common(1)[0][0]
                rows.append(
                    _row(cfg, f"{m}+trial-env", r, Ns[modal], S[tb, pick, i], U[tb, pick, i], cut[i], fmi_mean, n)
                )
    return SweepResult(rows=rows, trials=results, failures=failures, violations=_check_bounds(cfg, ok))


def run_rate_sweep(cfg: ExperimentConfig, workers: int = 1) -> SweepResult:
    """Rate-capacity curves for every method and candidate ``N``.

    Rows come per fixed ``N``, plus ``<method>+env`` (best ``N`` of the mean
    curves at each rate) and ``<method>+trial-env`` (best ``N`` per trial,
    then averaged; ``N_used`` is the most frequent choice).
    """
    results = run_trials(partial(sweep_trial, cfg), cfg.trials, workers)
    return aggregate_sweep(cfg, results)


def run_dr_comparison(cfg: ExperimentConfig, workers: int = 1) -> SweepResult:
    """Paired comparison of reduction methods on shared channel draws."""
    methods = cfg.methods if cfg.methods else [dimred.TCKLT, dimred.TKLT, dimred.ANTENNA_SELECT, dimred.ANTENNA_REDUCE]
    return run_rate_sweep(dataclasses.replace(cfg, methods=list(methods)), workers)


# -- convergence ---------------------------------------------------------------

CONVERGENCE_FIELDS = ["N", "sweep", "mean_normalized_joint_mi", "trials", "seed"]


@dataclass
class ConvergenceTrial:
    trial: int
    ok: bool
    full_mi: float = math.nan
    sweeps: dict[int, np.ndarray] = field(default_factory=dict)  # N -> (sweeps+1,)
    decreases: dict[int, int] = field(default_factory=dict)  # N -> count of decreasing updates
    updates: dict[int, int] = field(default_factory=dict)
    error: str = ""


def convergence_trial(cfg: ExperimentConfig, trial: int) -> ConvergenceTrial:
    try:
        _, cs = _draw(cfg, trial)
        out = ConvergenceTrial(trial=trial, ok=True, full_mi=dimred.full_mi(cs))
        for N in cfg.candidate_Ns():
            fb = dimred.tcklt_bca(cs, N, j_max=cfg.sweeps, rel_tol=0.0)
            tr = np.asarray(fb.trace)
            vals = np.asarray(fb.sweep_values())
            # pad if the ascent stalled exactly (objective cannot move further)
            if len(vals) < cfg.sweeps + 1:
                vals = np.concatenate([vals, np.full(cfg.sweeps + 1 - len(vals), vals[-1])])
            out.sweeps[N] = vals
            slack = dimred.MONOTONE_SLACK * np.maximum(1.0, np.abs(tr[:-1]))
            out.decreases[N] = int(np.sum(np.diff(tr) < -slack))
            out.updates[N] = len(tr) - 1
        return out
    except (FronthaulError, np.linalg.LinAlgError) as exc:
        return ConvergenceTrial(trial=trial, ok=False, error=f"{type(exc).__name__}: {exc}")


@dataclass
class ConvergenceResult:
    table: list[dict]
    trials: list[ConvergenceTrial]
    failures: int


def run_convergence(cfg: ExperimentConfig, workers: int = 1) -> ConvergenceResult:
    """Joint MI (normalized by the full MI) after each BCA sweep, averaged per ``N``."""
    results = run_trials(partial(convergence_trial, cfg), cfg.trials, workers)
    ok = [t for t in results if t.ok]
    table = []
    for N in cfg.candidate_Ns():
        if not ok:
            break
        norm = np.stack([t.sweeps[N] / t.full_mi for t in ok]).mean(axis=0)
        for j, v in enumerate(norm):
            table.append(
                {"N": N, "sweep": j, "mean_normalized_joint_mi": float(v), "trials": len(ok), "seed": cfg.scenario.seed}
            )
    return ConvergenceResult(table=table, trials=results, failures=len(results) - len(ok))


# -- SNR scaling ---------------------------------------------------------------

SNR_FIELDS = ["method", "N", "rho_db", "mean_joint_mi", "mean_full_mi", "mean_fraction", "trials", "seed"]


def snr_trial(cfg: ExperimentConfig, trial: int) -> dict:
    try:
        _, cs0 = _draw(cfg, trial)
        out = {}
        for rdb in cfg.rho_db_grid:
            cs = cs0.with_rho(10.0 ** (rdb / 10.0))
            fmi = dimred.full_mi(cs)
            for m in cfg.methods:
                Ns = [cs.M] if m == dimred.NONE else cfg.candidate_Ns()
                for N in Ns:
                    fb = dimred.design_filters(cs, m, N, j_max=cfg.j_max)
                    out[(m, N, rdb)] = (dimred.joint_mi(cs, fb), fmi)
        return {"trial": trial, "ok": True, "values": out}
    except (FronthaulError, np.linalg.LinAlgError) as exc:
        return {"trial": trial, "ok": False, "error": str(exc)}


@dataclass
class SnrResult:
    table: list[dict]
    trials: list[dict]


def run_snr_scaling(cfg: ExperimentConfig, workers: int = 1) -> SnrResult:
    """Joint MI captured by each reduction versus SNR, with the full-dimension MI."""
    results = run_trials(partial(snr_trial, cfg), cfg.trials, workers)
    ok = [t for t in results if t["ok"]]
    table = []
    if ok:
        for key in ok[0]["values"]:
            m, N, rdb = key
            v = np.array([t["values"][key] for t in ok])
            table.append({
                "method": m, "N": N, "rho_db": rdb,
                "mean_joint_mi": float(v[:, 0].mean()), "mean_full_mi": float(v[:, 1].mean()),
                "mean_fraction": float(np.mean(v[:, 0] / v[:, 1])),
                "trials": len(ok), "seed": cfg.scenario.seed,
            })
    return SnrResult(table=table, trials=results)


# -- imperfect CSI -------------------------------------------------------------

PERFECT = math.inf


def lower_bound_curve(rcs, R: np.ndarray, allocation: str = "approx") -> np.ndarray:
    """Estimated-CSI sum capacity lower bound at every rate of ``R`` at once.

    Same quantity as building :func:`compression.heuristic_plan` per rate and
    calling :func:`capacity.sum_capacity_imperfect`, vectorized over rates.
    """
    nominal = comp.component_variances(rcs)
    if allocation == "approx":
        rates = comp.approx_rate_allocation_batch(rcs.gamma, R)
    else:
        Delta = comp.uqn_delta_batch(nominal[None], R[:, None])
        rates = np.log2(1.0 + nominal / Delta[..., None])
    phi, erased = comp.noise_from_rates(nominal, rates)
    w = np.where(erased, 0.0, 1.0 / (1.0 + phi))  # (nR, L, N)
    B = np.stack([G.conj().T @ V for G, V in zip(rcs.G, rcs.V)])  # (L, K, N)
    S = np.einsum("rli,lki,lji->rkj", w, B, B.conj())
    return np.asarray(log2det_eye_plus(rcs.rho * S))


def imperfect_trial(cfg: ExperimentConfig, trial: int) -> dict:
    """Lower-bound sum capacity per (method, N, rho_pl) over the rate grid.

    ``rho_pl = inf`` runs the same estimate-based pipeline with exact CSI and
    serves as the perfect-CSI reference.
    """
    R = np.asarray(cfg.rate_grid)
    try:
        sc, cs = _draw(cfg, trial)
        out: dict = {}
        genie: dict = {}
        for pdb in list(cfg.rho_pl_db or []) + [PERFECT]:
            rho_pl = math.inf if pdb == PERFECT else 10.0 ** (pdb / 10.0)
            est = estimate_channels(cs, sc, rho_pl, stream(cfg.scenario.seed, trial, "pilot"))
            wcs = icsi.whitening(est)
            for m in cfg.methods:
                Ns = [cs.M] if m == dimred.NONE else cfg.candidate_Ns()
                for N in Ns:
                    fb = icsi.design_filters_imperfect(wcs, N, j_max=cfg.j_max, method=m)
                    rcs = icsi.reduced_channel_imperfect(wcs, fb)
                    out[(m, N, pdb)] = lower_bound_curve(rcs, R, cfg.allocation)
                    if cfg.genie:
                        s2 = icsi.genie_variances(wcs, fb, rcs.V)
                        genie[(m, N, pdb)] = np.array([
                            icsi.genie_sum_capacity(
                                wcs, fb, comp.heuristic_plan(rcs, float(r), sigma2=s2, allocation=cfg.allocation)
                            )
                            for r in R
                        ])
        return {"trial": trial, "ok": True, "values": out, "genie": genie, "full_mi": dimred.full_mi(cs)}
    except (FronthaulError, np.linalg.LinAlgError) as exc:
        return {"trial": trial, "ok": False, "error": str(exc)}


@dataclass
class ImperfectResult:
    rows: list[ResultRow]
    trials: list[dict]
    failures: int

    def curve(self, method: str, rho_pl_db: float) -> np.ndarray:
        """Mean curve of the curve-level envelope row for a method and pilot SNR."""
        name = f"{method}+env" if method != dimred.NONE else method
        rows = [r for r in self.rows if r.method == name and (r.rho_pl_db == rho_pl_db)]
        return np.array([r.mean_sum_capacity for r in sorted(rows, key=lambda r: r.R)])


def run_imperfect_csi(cfg: ExperimentConfig, workers: int = 1) -> ImperfectResult:
    """Rate-capacity lower bounds for each pilot SNR plus the perfect-CSI curve."""
    results = run_trials(partial(imperfect_trial, cfg), cfg.trials, workers)
    ok = [t for t in results if t["ok"]]
    R = np.asarray(cfg.rate_grid)
    rows: list[ResultRow] = []
    if not ok:
        return ImperfectResult(rows=rows, trials=results, failures=len(results))
    n = len(ok)
    fmi = np.array([t["full_mi"] for t in ok])
    cut = np.minimum(cfg.scenario.L * R[None, :], fmi[:, None]).mean(axis=0)
    nan_users = np.full(1, np.nan)  # per-user rates are not evaluated under imperfect CSI
    for source in ("values", "genie") if cfg.genie else ("values",):
        suffix = "" if source == "values" else ":genie"
        keys = list(ok[0][source])
        for pdb in list(cfg.rho_pl_db or []) + [PERFECT]:
            for m in cfg.methods:
                Ns = sorted({N for (mm, N, p) in keys if mm == m and p == pdb})
                V = np.stack([np.stack([t[source][(m, N, pdb)] for t in ok]) for N in Ns])  # (nN, n, R)
                best = np.argmax(V.mean(axis=1), axis=0)
                for j, N in enumerate(Ns):
                    for i, r in enumerate(R):
                        rows.append(_row(cfg, m + suffix, r, N, V[j, :, i], nan_users, cut[i], fmi.mean(), n, pdb))
                if len(Ns) > 1:
                    for i, r in enumerate(R):
                        rows.append(_row(cfg, f"{m}+env{suffix}", r, Ns[best[i]], V[best[i], :, i], nan_users, cut[i], fmi.mean(), n, pdb))
    return ImperfectResult(rows=rows, trials=results, failures=len(results) - n)


# -- output --------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "inf" if math.isinf(v) and v > 0 else format(float(v), ".9g")
    return str(v)


def to_csv(records, fields: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for rec in records:
        d = dataclasses.asdict(rec) if dataclasses.is_dataclass(rec) else rec
        w.writerow([_fmt(d[f]) for f in fields])
    return buf.getvalue()


def write_csv(path: Path, records, fields: list[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(records, fields))
    return path


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True, text=True, timeout=5, cwd=Path(__file__).parent,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    from . import __version__
    return __version__


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def append_manifest(out_dir: Path, experiment: str, cfg: ExperimentConfig, wall: float, **extra) -> None:
    entry = {
        "experiment": experiment,
        "config": config_to_dict(cfg),
        "seed": cfg.scenario.seed,
        "version": version_string(),
        "wall_time_s": round(wall, 3),
        **extra,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.jsonl", "a") as fh:
        fh.write(json.dumps(entry, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    if isinstance(o, np.generic):
        return o.item()
    return str(o)


# declarative plot descriptions, one per figure file
PLOTS = {
    "fig2": {"title": "Rate-capacity curves per reduced dimension", "x": "R", "y": "mean_sum_capacity",
             "series": ["method", "N_used"], "reference": "cutset"},
    "fig3": {"title": "Block-coordinate ascent convergence", "x": "sweep", "y": "mean_normalized_joint_mi",
             "series": ["N"]},
    "fig4": {"title": "Joint mutual information versus SNR", "x": "rho_db", "y": "mean_joint_mi",
             "series": ["method", "N"], "reference": "mean_full_mi"},
    "fig8": {"title": "Dimension reduction method comparison", "x": "R", "y": "mean_sum_capacity",
             "series": ["method"], "reference": "cutset"},
    "fig9": {"title": "User capacities under LMMSE detection", "x": "R",
             "y": ["mean_user_capacity", "outage5_user_capacity"], "series": ["method"]},
    "fig10": {"title": "Imperfect CSI rate-capacity lower bounds", "x": "R", "y": "mean_sum_capacity",
              "series": ["method", "rho_pl_db"], "reference": "cutset"},
}


def write_plot_spec(out_dir: Path, figures: list[str]) -> None:
    path = out_dir / "plots.json"
    spec = json.loads(path.read_text()) if path.exists() else {}
    for f in figures:
        spec[f] = {"data": f"{f}.csv", **PLOTS[f]}
    path.write_text(json.dumps(dict(sorted(spec.items())), indent=2) + "\n")


def _env_rows(rows: list[ResultRow]) -> list[ResultRow]:
    return [r for r in rows if "+trial-env" not in r.method]


def execute(experiment: str, cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> dict:
    """Run one named experiment and write its CSV, figure data and manifest entry."""
    out_dir = Path(out_dir)
    t0 = time.perf_counter()
    summary: dict = {}
    if experiment == "sweep":
        res = run_rate_sweep(cfg, workers)
        write_csv(out_dir / "sweep.csv", res.rows, RESULT_FIELDS)
        write_csv(out_dir / "fig2.csv", _env_rows(res.rows), RESULT_FIELDS)
        write_csv(out_dir / "fig9.csv", [r for r in res.rows if r.method.endswith("+env") or r.method == dimred.NONE], RESULT_FIELDS)
        figures = ["fig2", "fig9"]
        summary = {"failures": res.failures, "bound_violations": len(res.violations)}
    elif experiment == "compare-dr":
        res = run_dr_comparison(cfg, workers)
        write_csv(out_dir / "compare_dr.csv", res.rows, RESULT_FIELDS)
        write_csv(out_dir / "fig8.csv", [r for r in res.rows if r.method.endswith("+env") or r.method == dimred.NONE], RESULT_FIELDS)
        figures = ["fig8"]
        summary = {"failures": res.failures, "bound_violations": len(res.violations)}
    elif experiment == "converge":
        res = run_convergence(cfg, workers)
        write_csv(out_dir / "converge.csv", res.table, CONVERGENCE_FIELDS)
        write_csv(out_dir / "fig3.csv", res.table, CONVERGENCE_FIELDS)
        figures = ["fig3"]
        summary = {"failures": res.failures}
    elif experiment == "snr-scaling":
        res = run_snr_scaling(cfg, workers)
        write_csv(out_dir / "snr_scaling.csv", res.table, SNR_FIELDS)
        write_csv(out_dir / "fig4.csv", res.table, SNR_FIELDS)
        figures = ["fig4"]
    elif experiment == "imperfect-csi":
        res = run_imperfect_csi(cfg, workers)
        write_csv(out_dir / "imperfect_csi.csv", res.rows, RESULT_FIELDS)
        write_csv(out_dir / "fig10.csv", res.rows, RESULT_FIELDS)
        figures = ["fig10"]
        summary = {"failures": res.failures}
    else:
        raise ConfigError(f"unknown experiment {experiment!r}")
    write_plot_spec(out_dir, figures)
    append_manifest(out_dir, experiment, cfg, time.perf_counter() - t0, workers=workers, **summary)
    return summary
