import dataclasses
import json
import math

import numpy as np
import pytest

from verifcs.decoder import Outcome, run_to_convergence
from verifcs import decoder
from verifcs.errors import DegenerateFit
from verifcs.graph import build_regular
from verifcs.harness import (
    FIXED,
    CurvePoint,
    ExperimentConfig,
    FailureCurve,
    conditional_unidentified_stats,
    curve_csv,
    curve_point,
    estimate_failure_probability,
    fit_decay,
    fixed_graph,
    read_curve_csv,
    run_trial,
    run_trials,
    summary_json,
    sweep_incremental,
    trial_streams,
    trials_csv,
    wilson_interval,
)
from verifcs.incremental import IncrementalConfig
from verifcs.signal import gaussian_sparse_arrays, measure

SMALL = ExperimentConfig(n=300, m=60, var_degree=3, k=28, trials=200, master_seed=4)


def test_wilson_known_value():
    # z = 1.959964, p = 0.5, n = 100: centre 0.5, half-width ~0.0962
    lo, hi = wilson_interval(50, 100)
    assert abs(lo - 0.40383) < 1e-4 and abs(hi - 0.59617) < 1e-4


def test_wilson_edges():
    lo, hi = wilson_interval(0, 400)
    assert lo == 0.0 and 0 < hi < 0.01
    lo, hi = wilson_interval(400, 400)
    assert hi == 1.0 and lo > 0.99
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_wilson_coverage():
    rng = np.random.default_rng(0)
    p, n = 0.1, 400
    covered = 0
    for _ in range(1000):
        lo, hi = wilson_interval(int(rng.binomial(n, p)), n)
        covered += lo <= p <= hi
    assert covered >= 930


def test_curve_point_ordering():
    for f in (0, 1, 17, 400):
        pt = curve_point(3, f, 400)
        assert pt.ci_low <= pt.p_hat <= pt.ci_high


def _curve(pairs, trials=10**6):
    return FailureCurve(tuple(curve_point(L, f, trials) for L, f in pairs))


def test_fit_exact_geometric():
    pts = tuple(CurvePoint(L, 1, 1, 0.1 * 0.5 ** L, 0, 1) for L in range(6))
    fit = fit_decay(FailureCurve(pts))
    assert abs(fit.alpha - 0.5) < 1e-12 and abs(fit.p0 - 0.1) < 1e-12
    assert fit.rms_log_residual < 1e-12 and fit.points_used == 6


def test_fit_constant_curve():
    fit = fit_decay(_curve([(0, 500), (1, 500), (2, 500)]))
    assert abs(fit.alpha - 1.0) < 1e-12


def test_fit_skips_zero_points_and_needs_two():
    fit = fit_decay(_curve([(0, 800), (1, 400), (2, 0)]))
    assert fit.points_used == 2 and abs(fit.alpha - 0.5) < 1e-12
    with pytest.raises(DegenerateFit):
        fit_decay(_curve([(0, 10), (1, 0)]))


def test_trial_streams_independent_of_order():
    a = trial_streams(1, 7)[1].random(3)
    trial_streams(1, 6)
    b = trial_streams(1, 7)[1].random(3)
    assert (a == b).all()
    assert not (trial_streams(1, 8)[1].random(3) == a).all()


def test_run_trial_matches_reference_decoder():
    cfg = SMALL
    for i in range(30):
        rec = run_trial(cfg, i)
        g_rng, s_rng, _ = trial_streams(cfg.master_seed, i)
        g = build_regular(cfg.n, cfg.m, cfg.var_degree, g_rng)
        support, vals = gaussian_sparse_arrays(cfg.n, cfg.k, s_rng)
        x = np.zeros(cfg.n)
        x[support] = vals
        ref = run_to_convergence(decoder.init(g, measure(g, x)), max_iterations=cfg.n)
        expect = Outcome.SUCCESS if ref.outcome == Outcome.SUCCESS else Outcome.EXHAUSTED
        assert rec.outcome == expect
        assert rec.unidentified_final == ref.unidentified_count
        assert not rec.false_verification_flag


def test_zero_sparsity_never_fails():
    pt = estimate_failure_probability(SMALL.replace(k=0, trials=50))
    assert pt.failures == 0 and pt.p_hat == 0.0


def test_estimate_failure_is_base_decoder():
    cfg = SMALL.replace(incremental=IncrementalConfig(iota_max=10))
    pt = estimate_failure_probability(cfg)
    assert pt.L == 0 and pt.trials == 200
    assert pt == estimate_failure_probability(SMALL)
    assert 0 < pt.failures < 200


def test_derived_sweep_equals_direct_sweep():
    ls = (0, 1, 2, 4, 8)
    derived, _ = sweep_incremental(SMALL, ls)
    direct, _ = sweep_incremental(SMALL, ls, direct=True)
    assert derived == direct
    p = [pt.p_hat for pt in derived.points]
    assert p == sorted(p, reverse=True)
    assert derived.points[0] == estimate_failure_probability(SMALL)


def test_numeric_trigger_sweeps_directly():
    cfg = SMALL.replace(trials=40, incremental=IncrementalConfig(kappa0=2))
    curve, records = sweep_incremental(cfg, (0, 3))
    assert [pt.L for pt in curve.points] == [0, 3]
    assert max(r.samples_used for r in records) <= 3


def test_workers_do_not_change_results():
    a = run_trials(SMALL.replace(trials=120))
    b = run_trials(SMALL.replace(trials=120, workers=2), block=25)
    assert trials_csv(a) == trials_csv(b)


def test_block_size_does_not_change_results():
    assert run_trials(SMALL, block=7) == run_trials(SMALL, block=500)


def test_fixed_mode_reuses_one_graph():
    cfg = SMALL.replace(matrix_mode=FIXED, trials=20)
    g = fixed_graph(cfg)
    assert g == fixed_graph(cfg)
    recs = run_trials(cfg)
    assert recs == [run_trial(cfg, i, g) for i in range(20)]
    assert recs != run_trials(SMALL.replace(trials=20))


def test_config_validation():
    with pytest.raises(ValueError):
        SMALL.replace(trials=0)
    with pytest.raises(ValueError):
        SMALL.replace(k=SMALL.n + 1)
    with pytest.raises(ValueError):
        SMALL.replace(matrix_mode="shared")
    with pytest.raises(ValueError):
        SMALL.replace(l_values=(3, 1))
    assert "workers" not in SMALL.as_dict()


def test_conditional_stats():
    (st0, st1) = conditional_unidentified_stats(SMALL, [0, 28], min_failures=20, max_trials=300)
    assert st0.insufficient and st0.failures == 0 and math.isnan(st0.mean_ratio)
    assert not st1.insufficient and st1.failures == 20
    assert st1.median_ratio <= st1.p90_ratio
    # the count stops at the trial that produced the 20th failure
    recs = run_trials(SMALL.replace(k=28), 0, st1.trials)
    assert sum(r.outcome != Outcome.SUCCESS for r in recs) == 20
    assert recs[-1].outcome != Outcome.SUCCESS


def test_conditional_stats_block_independent():
    a = conditional_unidentified_stats(SMALL, [28], min_failures=15, block=9)
    b = conditional_unidentified_stats(SMALL, [28], min_failures=15, block=500)
    assert a == b


def test_curve_csv_round_trip():
    curve, _ = sweep_incremental(SMALL.replace(trials=50), (0, 2))
    text = curve_csv(curve)
    assert text.splitlines()[0] == "L,failures,trials,p_hat,ci_low,ci_high"
    assert read_curve_csv(text) == curve


def test_trials_csv_has_no_timing_by_default():
    recs = run_trials(SMALL.replace(trials=3))
    assert "wall_time" not in trials_csv(recs)
    assert trials_csv(recs, include_timing=True).splitlines()[0].endswith(",wall_time")


def test_summary_is_deterministic():
    d = SMALL.as_dict()
    a = summary_json("mc", d)
    assert a == summary_json("mc", dict(reversed(list(d.items()))))
    doc = json.loads(a)
    assert doc["config"]["k"] == 28 and "config_sha1" in doc
    assert dataclasses.asdict(SMALL.incremental) == doc["config"]["incremental"]
