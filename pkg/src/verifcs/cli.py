"""verifcs: sparse matrices, verification decodes, Monte Carlo runs and oracle checks.

Exit codes: 0 success, 2 decode failure (``decode`` only), 1 anything else,
including usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from verifcs import __version__, harness, oracle
from verifcs.decoder import Outcome
from verifcs.errors import DegenerateFit, VerifcsError
from verifcs.graph import build_regular, girth_at_least_six, load_alist, save_alist
from verifcs.incremental import ArrayOracle, IncrementalConfig, IncrementalReport, run_incremental
from verifcs.signal import generate_gaussian_sparse, measure

WORKERS_ENV = "VERIFCS_WORKERS"

log = logging.getLogger("verifcs")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _nonneg(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text}")
    return v


def _int_list(text):
    """``"0,1,5"`` or an inclusive range ``"0:10"``."""
    if isinstance(text, (list, tuple)):
        return list(text)
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text):
    return [float(t) for t in text.split(",") if t.strip()]


def read_config_file(path) -> dict:
    """``key=value`` lines; ``#`` starts a comment. Keys use flag names."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _sidecar(path: Path, subcommand: str, config: dict):
    _write(path.with_name(path.name + ".manifest.json"),
           harness.summary_json(subcommand, config, extra={"outputs": [path.name]}))


# -- subcommands --------------------------------------------------------------

def cmd_gen_matrix(args) -> int:
    g = build_regular(args.n, args.m, args.deg, args.seed, args.max_attempts)
    out = Path(args.out)
    _write(out, save_alist(g))
    _sidecar(out, "gen-matrix", _config(args))
    cdeg = g.check_degrees
    print(f"wrote {out}: N={g.n_vars} M={g.n_checks} edges={g.n_edges}")
    print(f"variable degree {args.deg}; check degree min={cdeg.min()} max={cdeg.max()} mean={cdeg.mean():.3f}")
    print(f"girth>=6: {girth_at_least_six(g)}")
    return 0


def _load_matrix(path):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"matrix file not found: {p}")
    return load_alist(p.read_text())


def cmd_decode(args) -> int:
    g = _load_matrix(args.matrix)
    sig_rng, smp_rng = (np.random.default_rng(c) for c in np.random.SeedSequence(args.seed).spawn(2))
    e = generate_gaussian_sparse(g.n_vars, args.k, sig_rng)
    s = measure(g, e)
    cfg = IncrementalConfig(kappa0=IncrementalConfig.parse_trigger(args.trigger), iota_max=args.lmax,
                            max_iterations=args.max_iterations)
    rep = run_incremental(g, s, ArrayOracle(e.to_dense()), cfg, smp_rng)
    print(f"outcome={rep.outcome} L={rep.samples_used} k={rep.iterations_used} "
          f"VU_first_stall={rep.unidentified_at_first_stall} VU={len(rep.state.unidentified)}")
    if args.trace:
        _write(Path(args.trace), rep.state.event_log_csv())
    if args.out:
        out = Path(args.out)
        _write(out, IncrementalReport.CSV_HEADER + "\n" + rep.csv_row() + "\n")
        _sidecar(out, "decode", _config(args))
    return 0 if rep.outcome == Outcome.SUCCESS else 2


def _experiment(args, **over) -> harness.ExperimentConfig:
    inc = IncrementalConfig(kappa0=IncrementalConfig.parse_trigger(args.trigger), iota_max=0)
    fields = dict(n=args.n, m=args.m, var_degree=args.deg, k=args.k, trials=args.trials,
                  master_seed=args.seed, matrix_mode=args.matrix_mode, incremental=inc,
                  workers=args.workers)
    fields.update(over)
    return harness.ExperimentConfig(**fields)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_mc(args) -> int:
    cfg = _experiment(args)
    records = harness.run_trials(cfg)
    point = harness.estimate_failure_probability(cfg, records)
    curve = harness.FailureCurve((point,))
    out = _outdir(args)
    _write(out / "trials.csv", harness.trials_csv(records, args.timing))
    _write(out / "curve.csv", harness.curve_csv(curve))
    _write(out / "summary.json", harness.summary_json("mc", cfg.as_dict(), extra={
        "outputs": ["trials.csv", "curve.csv"],
        "false_verifications": sum(r.false_verification_flag for r in records),
    }))
    print(harness.curve_csv(curve), end="")
    return 0


def cmd_sweep(args) -> int:
    cfg = _experiment(args, l_values=tuple(args.l_values))
    curve, records = harness.sweep_incremental(cfg, direct=args.direct)
    out = _outdir(args)
    _write(out / "trials.csv", harness.trials_csv(records, args.timing))
    _write(out / "curve.csv", harness.curve_csv(curve))
    try:
        fit = harness.fit_decay(curve)
    except DegenerateFit as exc:
        log.warning("decay fit skipped: %s", exc)
        fit = None
    _write(out / "summary.json", harness.summary_json("sweep", cfg.as_dict(), fit, extra={
        "outputs": ["trials.csv", "curve.csv"],
        "false_verifications": sum(r.false_verification_flag for r in records),
    }))
    print(harness.curve_csv(curve), end="")
    if fit:
        print(f"p0={fit.p0:.6g} alpha={fit.alpha:.6g} rms_log_residual={fit.rms_log_residual:.6g}")
    return 0


def cmd_stats(args) -> int:
    cfg = _experiment(args, k=max(args.k_values))
    stats = harness.conditional_unidentified_stats(cfg, args.k_values, args.min_failures, args.trials)
    out = _outdir(args)
    _write(out / "stats.csv", harness.stats_csv(stats))
    short = [s.k for s in stats if s.insufficient]
    for k in short:
        print(f"warning: K={k} reached fewer than {args.min_failures} failures", file=sys.stderr)
    _write(out / "summary.json", harness.summary_json("stats", cfg.as_dict(), extra={
        "outputs": ["stats.csv"],
        "k_values": list(args.k_values),
        "min_failures": args.min_failures,
        "insufficient_failures": short,
        "trials_used": {str(s.k): s.trials for s in stats},
    }))
    print(harness.stats_csv(stats), end="")
    return 0


def cmd_fit(args) -> int:
    curve = harness.read_curve_csv(Path(args.curve).read_text())
    fit = harness.fit_decay(curve)
    print(f"p0={fit.p0:.6g} alpha={fit.alpha:.6g} rms_log_residual={fit.rms_log_residual:.6g} points={fit.points_used}")
    out = Path(args.out)
    _write(out, harness.summary_json("fit", _config(args), fit))
    return 0


def cmd_oracle(args) -> int:
    g = _load_matrix(args.matrix)
    if args.s is not None:
        s = np.array(args.s, dtype=float)
        planted = None
    else:
        if args.k is None:
            raise UsageError("oracle: give --s or --k")
        e = generate_gaussian_sparse(g.n_vars, args.k, np.random.default_rng(args.seed))
        s = measure(g, e)
        planted = {str(i): v for i, v in e.values.items()}
    k_max = g.n_vars if args.k_max is None else args.k_max
    res = oracle.enumerate_coset_leaders(g, s, k_max, args.tol)
    doc = harness.run_metadata("oracle", _config(args))
    doc["result"] = res.to_json()
    doc["planted"] = planted
    if args.spark_bound is not None:
        sp = oracle.spark(g, args.spark_bound)
        doc["spark"] = sp if isinstance(sp, int) else {"above_bound": sp.bound}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    _write(Path(args.out), text)
    print(json.dumps(doc["result"], sort_keys=True))
    return 0


# -- parser -------------------------------------------------------------------

def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "workers")}


def _common(p):
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--out", help="output path")
    p.add_argument("--config", help="key=value file; flags override it")


def _experiment_flags(p, trials_default):
    p.add_argument("--n", type=_positive, default=4095)
    p.add_argument("--m", type=_positive, default=738)
    p.add_argument("--deg", type=_positive, default=3)
    p.add_argument("--trials", type=_positive, default=trials_default)
    p.add_argument("--matrix-mode", choices=[harness.FRESH, harness.FIXED], default=harness.FRESH)
    p.add_argument("--trigger", default="on-stall", help="on-stall or kappa0=<int>")
    p.add_argument("--workers", type=_positive, default=int(os.environ.get(WORKERS_ENV, "1")))
    p.add_argument("--timing", action="store_true", help="add wall_time to trials.csv (not reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="verifcs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"verifcs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-matrix", help="build a 4-cycle-free column-regular matrix (alist)")
    _common(p)
    p.add_argument("--n", type=_positive, required=False)
    p.add_argument("--m", type=_positive, required=False)
    p.add_argument("--deg", type=_positive, default=3)
    p.add_argument("--max-attempts", type=_positive, default=20)
    p.set_defaults(func=cmd_gen_matrix, required=("n", "m", "out"))

    p = sub.add_parser("decode", help="decode one random signal; exit 2 on failure")
    _common(p)
    p.add_argument("--matrix")
    p.add_argument("--k", type=_nonneg)
    p.add_argument("--lmax", type=_nonneg, default=0, help="maximum direct samples")
    p.add_argument("--trigger", default="on-stall", help="on-stall or kappa0=<int>")
    p.add_argument("--max-iterations", type=_positive)
    p.add_argument("--trace", help="write the verification event log as CSV")
    p.set_defaults(func=cmd_decode, required=("matrix", "k"))

    p = sub.add_parser("mc", help="Monte Carlo failure probability of the base decoder")
    _common(p)
    _experiment_flags(p, 400)
    p.add_argument("--k", type=_nonneg, default=300)
    p.set_defaults(func=cmd_mc, required=("out",))

    p = sub.add_parser("sweep", help="failure probability against the direct-sample budget L")
    _common(p)
    _experiment_flags(p, 20000)
    p.add_argument("--k", type=_nonneg, default=280)
    p.add_argument("--l-values", type=_int_list, default=list(range(11)), help="'0:10' or '0,2,4'")
    p.add_argument("--direct", action="store_true", help="decode each L separately")
    p.set_defaults(func=cmd_sweep, required=("out",))

    p = sub.add_parser("stats", help="|V_U|/K over failing trials for several K")
    _common(p)
    _experiment_flags(p, 20000)
    p.add_argument("--k-values", type=_int_list, default=list(range(260, 341, 10)))
    p.add_argument("--min-failures", type=_positive, default=1000)
    p.set_defaults(func=cmd_stats, required=("out",), k=None)

    p = sub.add_parser("fit", help="fit P_f(L) = p0 * alpha**L to a curve CSV")
    _common(p)
    p.add_argument("--curve")
    p.set_defaults(func=cmd_fit, required=("curve", "out"))

    p = sub.add_parser("oracle", help="exhaustive coset-leader search on a tiny matrix (JSON)")
    _common(p)
    p.add_argument("--matrix")
    p.add_argument("--s", type=_float_list, help="measurement vector, comma separated")
    p.add_argument("--k", type=_nonneg, help="plant a random K-sparse signal instead of --s")
    p.add_argument("--k-max", type=_nonneg)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--spark-bound", type=_positive)
    p.set_defaults(func=cmd_oracle, required=("matrix", "out"))
    return parser


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub_parser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub_parser._actions}
        defaults = {}
        for key, raw in read_config_file(args.config).items():
            if key not in known or key in ("config", "help"):
                raise UsageError(f"{args.config}: unknown key {key!r} for {args.command}")
            action = known[key]
            if isinstance(action, argparse._StoreTrueAction):
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = action.type(raw) if action.type else raw
        sub_parser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    missing = [name for name in ("seed",) + tuple(args.required) if getattr(args, name, None) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s): "
                         + ", ".join("--" + m.replace("_", "-") for m in missing))
    del args.required
    return args


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, VerifcsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
