"""Monte Carlo estimation of decoding failure rates.

Every trial draws its own streams from ``SeedSequence(master_seed,
spawn_key=(trial_index,))`` so a result depends only on the configuration and
the trial index, never on how trials are spread over workers.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from verifcs import __version__, _kernels
from verifcs.decoder import Outcome
from verifcs.errors import DegenerateFit
from verifcs.graph import MeasurementGraph, build_regular
from verifcs.incremental import IncrementalConfig
from verifcs.signal import gaussian_sparse_arrays

log = logging.getLogger(__name__)

FRESH = "fresh-per-trial"
FIXED = "fixed"
FALSE_VERIFICATION_TOL = 1e-6
_OUTCOMES = {
    _kernels.SUCCESS: Outcome.SUCCESS,
    _kernels.STALLED: Outcome.STALLED,
    _kernels.MAX_ITERATIONS: Outcome.MAX_ITERATIONS,
    _kernels.EXHAUSTED: Outcome.EXHAUSTED,
}


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 4095
    m: int = 738
    var_degree: int = 3
    k: int = 300
    trials: int = 400
    master_seed: int = 1
    matrix_mode: str = FRESH
    incremental: IncrementalConfig = IncrementalConfig(iota_max=0)
    l_values: tuple = ()
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"k={self.k} not in [0, {self.n}]")
        if self.matrix_mode not in (FRESH, FIXED):
            raise ValueError(f"matrix_mode must be {FRESH!r} or {FIXED!r}")
        if list(self.l_values) != sorted(self.l_values):
            raise ValueError("l_values must be nondecreasing")
        object.__setattr__(self, "l_values", tuple(int(v) for v in self.l_values))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("workers")  # never part of a result's identity
        return d


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    outcome: Outcome
    samples_used: int
    unidentified_at_first_stall: int
    unidentified_final: int
    false_verification_flag: bool
    conflicts: int
    wall_time: float = field(default=0.0, compare=False)

    CSV_FIELDS = ("trial_index", "outcome", "samples_used", "unidentified_at_first_stall",
                  "unidentified_final", "false_verification_flag", "conflicts")


@dataclass(frozen=True)
class CurvePoint:
    L: int
    failures: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class FailureCurve:
    points: tuple

    def p_hat(self, L: int) -> float:
        return next(p.p_hat for p in self.points if p.L == L)


@dataclass(frozen=True)
class DecayFit:
    p0: float
    alpha: float
    rms_log_residual: float
    points_used: int


@dataclass(frozen=True)
class ConditionalStats:
    k: int
    mean_ratio: float
    median_ratio: float
    p90_ratio: float
    failures: int
    trials: int
    insufficient: bool
    degenerate: int = 0  # failures where nothing at all was identified


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # clamp rounding so that lo <= p <= hi holds exactly at the edges
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def curve_point(L: int, failures: int, trials: int) -> CurvePoint:
    lo, hi = wilson_interval(failures, trials)
    return CurvePoint(L, failures, trials, failures / trials, lo, hi)


def trial_streams(master_seed: int, trial_index: int):
    """Independent generators for (matrix, signal, sampling) of one trial."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
    return [np.random.default_rng(child) for child in ss.spawn(3)]


def fixed_graph(cfg: ExperimentConfig) -> MeasurementGraph:
    ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(2**63 - 1,))
    return build_regular(cfg.n, cfg.m, cfg.var_degree, np.random.default_rng(ss))


def run_trial(cfg: ExperimentConfig, trial_index: int, graph: MeasurementGraph | None = None) -> TrialRecord:
    t0 = time.perf_counter()
    g_rng, s_rng, x_rng = trial_streams(cfg.master_seed, trial_index)
    if graph is None:
        graph = build_regular(cfg.n, cfg.m, cfg.var_degree, g_rng)
    support, vals = gaussian_sparse_arrays(cfg.n, cfg.k, s_rng)
    truth = np.zeros(cfg.n)
    truth[support] = vals
    s = _kernels.measure_csr(graph.chk_ptr, graph.chk_idx, truth)
    inc = cfg.incremental
    kappa, iota, max_it = inc.resolved(cfg.n)
    uniforms = x_rng.random(2 * iota)
    (code, _k, samples, vu_first, vu_left, _rmax, conflicts, values, ident,
     _per_it, _first_k) = _kernels.decode_incremental(
        graph.var_ptr, graph.var_idx, graph.chk_ptr, graph.chk_idx, s, truth,
        kappa, iota, max_it, inc.eps_zero, inc.eps_eq, uniforms)
    false_flag = bool(np.any(np.abs(values[ident] - truth[ident]) > FALSE_VERIFICATION_TOL))
    if false_flag:
        log.warning("false verification: master_seed=%d trial=%d", cfg.master_seed, trial_index)
    return TrialRecord(trial_index, _OUTCOMES[code], int(samples), int(vu_first), int(vu_left),
                       false_flag, int(conflicts), time.perf_counter() - t0)


def _run_block(args):
    cfg, start, stop, graph = args
    return [run_trial(cfg, i, graph) for i in range(start, stop)]


def run_trials(cfg: ExperimentConfig, start: int = 0, stop: int | None = None,
               block: int = 250) -> list[TrialRecord]:
    """Trials ``start..stop-1`` in index order, optionally on a process pool."""
    stop = cfg.trials if stop is None else stop
    graph = fixed_graph(cfg) if cfg.matrix_mode == FIXED else None
    jobs = [(cfg, a, min(a + block, stop), graph) for a in range(start, stop, block)]
    if cfg.workers <= 1 or len(jobs) <= 1:
        blocks = map(_run_block, jobs)
        return [r for b in blocks for r in b]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return [r for b in pool.map(_run_block, jobs) for r in b]


def estimate_failure_probability(cfg: ExperimentConfig, records=None) -> CurvePoint:
    """Base decoder only (no direct samples); failure = outcome != Success."""
    if records is None:
        cfg = cfg.replace(incremental=dataclasses.replace(cfg.incremental, iota_max=0))
        records = run_trials(cfg)
    failures = sum(r.outcome != Outcome.SUCCESS for r in records)
    return curve_point(0, failures, len(records))


def sweep_incremental(cfg: ExperimentConfig, l_values=None, direct: bool = False):
    """Failure probability for each sample budget ``L`` in ``l_values``.

    All budgets share the per-trial seeds. By default each trial is decoded
    once with the largest budget: with the on-stall trigger the run with
    budget ``L`` follows the same trajectory until its ``L+1``-th trigger, so
    it succeeds exactly when the large-budget run succeeds using at most ``L``
    samples. ``direct=True`` decodes every budget separately instead.

    Returns ``(curve, records)``, records being those of the largest budget.
    """
    l_values = tuple(cfg.l_values if l_values is None else l_values)
    if not l_values:
        raise ValueError("l_values is empty")
    if cfg.incremental.kappa0 != "on-stall" and not direct:
        direct = True
    base_inc = cfg.incremental
    if direct:
        points = []
        records = None
        for L in l_values:
            records = run_trials(cfg.replace(incremental=dataclasses.replace(base_inc, iota_max=L)))
            points.append(curve_point(L, sum(r.outcome != Outcome.SUCCESS for r in records), len(records)))
        return FailureCurve(tuple(points)), records
    top = cfg.replace(incremental=dataclasses.replace(base_inc, iota_max=max(l_values)))
    records = run_trials(top)
    points = []
    for L in l_values:
        failures = sum(not (r.outcome == Outcome.SUCCESS and r.samples_used <= L) for r in records)
        points.append(curve_point(L, failures, len(records)))
    return FailureCurve(tuple(points)), records


def conditional_unidentified_stats(cfg: ExperimentConfig, k_values, min_failures: int = 1000,
                                   max_trials: int | None = None, block: int = 500) -> list[ConditionalStats]:
    """|V_U|/K at the stall, over failing trials, for each sparsity in ``k_values``.

    Trials run in index order until ``min_failures`` failures or
    ``max_trials`` trials (default ``cfg.trials``); only trials up to the one
    producing the ``min_failures``-th failure count, so the result is
    independent of ``block``.
    """
    max_trials = cfg.trials if max_trials is None else max_trials
    out = []
    for k in k_values:
        kcfg = cfg.replace(k=k, incremental=dataclasses.replace(cfg.incremental, iota_max=0))
        ratios = []
        used = 0
        degenerate = 0
        while used < max_trials and len(ratios) < min_failures:
            stop = min(used + block, max_trials)
            for r in run_trials(kcfg, used, stop):
                used += 1
                if r.outcome != Outcome.SUCCESS:
                    ratios.append(r.unidentified_final / k)
                    degenerate += r.unidentified_final >= cfg.n
                    if len(ratios) >= min_failures:
                        break
        insufficient = len(ratios) < min_failures
        if insufficient:
            log.warning("K=%d: only %d failures in %d trials", k, len(ratios), used)
        arr = np.array(ratios) if ratios else np.array([np.nan])
        out.append(ConditionalStats(
            k=k,
            mean_ratio=float(np.mean(arr)),
            median_ratio=float(np.median(arr)),
            p90_ratio=float(np.quantile(arr, 0.9)),
            failures=len(ratios),
            trials=used,
            insufficient=insufficient,
            degenerate=int(degenerate),
        ))
    return out


def fit_decay(curve: FailureCurve) -> DecayFit:
    """Least-squares fit of ``ln p_hat = ln p0 + L ln alpha``.

    ``alpha`` is the per-sample factor, ``P_f(L) ~ p0 * alpha**L``; a value of
    0.5 means each extra sample halves the failure rate. Points without any
    failure are skipped.
    """
    pts = [p for p in curve.points if p.failures >= 1]
    if len(pts) < 2 or len({p.L for p in pts}) < 2:
        raise DegenerateFit("need failures at two or more distinct L values")
    L = np.array([p.L for p in pts], dtype=float)
    y = np.log([p.p_hat for p in pts])
    slope, intercept = np.polyfit(L, y, 1)
    resid = y - (intercept + slope * L)
    return DecayFit(
        p0=float(math.exp(intercept)),
        alpha=float(math.exp(slope)),
        rms_log_residual=float(np.sqrt(np.mean(resid ** 2))),
        points_used=len(pts),
    )


# -- file outputs -------------------------------------------------------------

CURVE_FIELDS = ("L", "failures", "trials", "p_hat", "ci_low", "ci_high")
STATS_FIELDS = ("K", "mean_ratio", "median_ratio", "p90_ratio", "failures")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def trials_csv(records, include_timing: bool = False) -> str:
    header = list(TrialRecord.CSV_FIELDS) + (["wall_time"] if include_timing else [])
    rows = []
    for r in records:
        row = [r.trial_index, r.outcome.value, r.samples_used, r.unidentified_at_first_stall,
               r.unidentified_final, int(r.false_verification_flag), r.conflicts]
        if include_timing:
            row.append(f"{r.wall_time:.6f}")
        rows.append(row)
    return _csv(header, rows)


def curve_csv(curve: FailureCurve) -> str:
    return _csv(CURVE_FIELDS, [[p.L, p.failures, p.trials, repr(p.p_hat), repr(p.ci_low), repr(p.ci_high)]
                               for p in curve.points])


def read_curve_csv(text: str) -> FailureCurve:
    """Stored ``p_hat``/CI columns win; missing ones are recomputed from counts."""
    points = []
    for r in csv.DictReader(io.StringIO(text)):
        pt = curve_point(int(r["L"]), int(r["failures"]), int(r["trials"]))
        stored = {k: float(r[k]) for k in ("p_hat", "ci_low", "ci_high") if r.get(k) not in (None, "")}
        points.append(dataclasses.replace(pt, **stored))
    return FailureCurve(tuple(points))


def stats_csv(stats) -> str:
    rows = []
    for s in stats:
        rows.append([s.k, repr(s.mean_ratio), repr(s.median_ratio), repr(s.p90_ratio), s.failures])
    return _csv(STATS_FIELDS, rows)


def run_metadata(subcommand: str, config: dict) -> dict:
    """Manifest for an output: everything needed to replay it, nothing
    time-dependent so reruns are byte-identical."""
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return {
        "subcommand": subcommand,
        "tool": "verifcs",
        "version": __version__,
        "config": config,
        "config_sha1": hashlib.sha1(blob).hexdigest(),
    }


def summary_json(subcommand: str, config: dict, fit: DecayFit | None = None, extra: dict | None = None) -> str:
    doc = run_metadata(subcommand, config)
    if fit is not None:
        doc["decay_fit"] = dataclasses.asdict(fit)
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
