import csv
import json
import math

import numpy as np
import pytest

from fronthaul import capacity as cap
from fronthaul import compression as comp
from fronthaul import dimred
from fronthaul.config import load_config
from fronthaul.errors import ConfigError
from fronthaul.harness import (
    PERFECT,
    RESULT_FIELDS,
    ResultRow,
    _draw,
    execute,
    run_convergence,
    run_dr_comparison,
    run_imperfect_csi,
    run_rate_sweep,
    run_snr_scaling,
    to_csv,
)


def cfg(*overrides):
    return load_config(None, ["trials=12", *overrides])


@pytest.fixture(scope="module")
def sweep():
    c = cfg()
    return c, run_rate_sweep(c)


def _rows(res, method):
    return sorted((r for r in res.rows if r.method == method), key=lambda r: r.R)


def test_result_fields():
    assert RESULT_FIELDS == [
        "method", "R", "N_used", "rho_db", "rho_pl_db", "mean_sum_capacity", "mean_user_capacity",
        "outage5_user_capacity", "cutset", "full_mi", "trials", "seed",
    ]


def test_no_reduction_matches_direct_uqn(sweep):
    c, res = sweep
    R = np.asarray(c.rate_grid)
    vals = []
    for t in range(c.trials):
        _, cs = _draw(c, t)
        rcs = dimred.reduce_channels(cs, [np.eye(cs.M)] * cs.L)
        vals.append([cap.sum_capacity_sic(rcs, comp.uqn_plan(rcs, r).Delta) for r in R])
    got = [r.mean_sum_capacity for r in _rows(res, dimred.NONE)]
    np.testing.assert_allclose(got, np.mean(vals, axis=0), rtol=1e-9)


def test_envelope_dominates_and_monotone(sweep):
    c, res = sweep
    env = np.array([r.mean_sum_capacity for r in _rows(res, "TCKLT+env")])
    tenv = np.array([r.mean_sum_capacity for r in _rows(res, "TCKLT+trial-env")])
    for N in c.candidate_Ns():
        fixed = np.array([r.mean_sum_capacity for r in res.rows if r.method == "TCKLT" and r.N_used == N])
        assert np.all(env >= fixed - 1e-12)
        assert np.all(tenv >= fixed - 1e-12)
    assert np.all(tenv >= env - 1e-12)
    for m in ("TCKLT+env", dimred.NONE):
        v = np.array([r.mean_sum_capacity for r in _rows(res, m)])
        assert np.all(np.diff(v) >= -1e-9)
    assert res.violations == [] and res.failures == 0


def test_rows_below_cutset(sweep):
    _, res = sweep
    for r in res.rows:
        assert r.mean_sum_capacity <= r.cutset + 1e-9
        assert r.mean_user_capacity * 8 <= r.mean_sum_capacity + 1e-9


def test_convergence_table():
    c = cfg("trials=6")
    res = run_convergence(c)
    for N in c.candidate_Ns():
        seq = np.array([r["mean_normalized_joint_mi"] for r in res.table if r["N"] == N])
        assert len(seq) == c.sweeps + 1
        assert np.all(np.diff(seq) >= -1e-12) and seq[-1] <= 1 + 1e-12
    _, cs = _draw(c, 0)
    t0 = res.trials[0]
    tk = dimred.joint_mi(cs, dimred.tklt_bank(cs, 2))
    assert t0.sweeps[2][0] == pytest.approx(tk, rel=1e-12)
    assert all(sum(t.decreases.values()) == 0 for t in res.trials)


def test_dr_comparison_paired():
    c = cfg("trials=8", "methods=[TCKLT, TKLT, ANTENNA_SELECT, ANTENNA_REDUCE]")
    res = run_dr_comparison(c)
    for t in res.ok_trials():
        for N in c.candidate_Ns():
            assert t.curves[("TCKLT", N)].joint_mi >= t.curves[("TKLT", N)].joint_mi - 1e-9
    for r in res.rows:
        assert r.mean_sum_capacity <= r.cutset + 1e-9


def test_snr_scaling():
    c = cfg("trials=4", "methods=[TCKLT, ANTENNA_REDUCE, NONE]")
    tab = run_snr_scaling(c).table
    for row in tab:
        assert row["mean_fraction"] <= 1 + 1e-12
        if row["method"] == dimred.NONE:
            assert row["mean_fraction"] == pytest.approx(1.0, rel=1e-12)
    for N in c.candidate_Ns():
        seq = [r["mean_joint_mi"] for r in tab if r["method"] == "TCKLT" and r["N"] == N]
        assert np.all(np.diff(seq) > 0)
    # N = K at every receiver keeps the whole column space
    for r in tab:
        if r["method"] == "TCKLT" and r["N"] == 8:
            assert r["mean_fraction"] == pytest.approx(1.0, rel=1e-9)


def test_snr_fraction_non_decreasing_full_rank():
    c = cfg("trials=4", "methods=[TCKLT]", "N_policy=[2, 4]", "rho_db_grid=[0, 10, 20, 30, 40]")
    tab = run_snr_scaling(c).table
    for N in (2, 4):
        frac = [r["mean_fraction"] for r in tab if r["N"] == N]
        assert np.all(np.diff(frac) >= -1e-3)


def test_imperfect_csi_reference():
    c = cfg("trials=6", "rho_pl_db=[0, 20]", "methods=[TCKLT]", "N_policy=[2, 3]", "allocation=exact")
    im = run_imperfect_csi(c)
    sw = run_rate_sweep(c)
    perfect = np.array([r.mean_sum_capacity for r in _rows(sw, "TCKLT+env")])
    np.testing.assert_allclose(im.curve("TCKLT", PERFECT), perfect, rtol=1e-9)
    approx = run_imperfect_csi(load_config(None, ["trials=6", "methods=[TCKLT]", "N_policy=[2, 3]"]))
    np.testing.assert_allclose(approx.curve("TCKLT", PERFECT), perfect, rtol=0.01)
    assert np.all(im.curve("TCKLT", 20.0) >= im.curve("TCKLT", 0.0))
    for r in im.rows:
        assert r.mean_sum_capacity <= r.cutset + 1e-9
        assert math.isnan(r.mean_user_capacity)


def test_imperfect_genie_rows():
    c = cfg("trials=2", "rho_pl_db=[10]", "methods=[TCKLT]", "N_policy=[2]", "genie=true", "rate_grid=[4, 20]")
    im = run_imperfect_csi(c)
    assert {r.method for r in im.rows} == {"TCKLT", "TCKLT:genie"}


def test_workers_give_identical_csv():
    c = cfg("trials=6")
    a = to_csv(run_rate_sweep(c, workers=1).rows, RESULT_FIELDS)
    b = to_csv(run_rate_sweep(c, workers=2).rows, RESULT_FIELDS)
    assert a == b


def test_csv_formatting():
    row = ResultRow("X", 2.0, 3, 15.0, None, 1 / 3, 0.5, 0.25, math.inf, 10.0, 5, 0)
    text = to_csv([row], RESULT_FIELDS)
    assert text.splitlines()[1] == "X,2,3,15,,0.333333333,0.5,0.25,inf,10,5,0"


def test_execute_writes_outputs(tmp_path):
    c = cfg("trials=2", "rate_grid=[2, 10]")
    execute("sweep", c, tmp_path)
    execute("sweep", c, tmp_path)
    for name in ("sweep.csv", "fig2.csv", "fig9.csv", "plots.json", "manifest.jsonl"):
        assert (tmp_path / name).exists()
    with open(tmp_path / "sweep.csv") as f:
        assert next(csv.reader(f)) == RESULT_FIELDS
    lines = (tmp_path / "manifest.jsonl").read_text().splitlines()
    assert len(lines) == 2
    entry = json.loads(lines[0])
    assert entry["seed"] == 0 and entry["config"]["trials"] == 2 and "version" in entry and "wall_time_s" in entry
    assert "fig2" in json.loads((tmp_path / "plots.json").read_text())
    with pytest.raises(ConfigError):
        execute("bogus", c, tmp_path)


def test_config_validation():
    with pytest.raises(ConfigError):
        cfg("detection=ZF")
    with pytest.raises(ConfigError):
        cfg("methods=[BOGUS]")
    with pytest.raises(ConfigError):
        cfg("N_policy=[1]")
