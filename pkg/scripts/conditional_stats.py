"""Fraction of the signal left unidentified when the base decoder fails.

For each K, runs trials until ``--min-failures`` failures and reports the
mean, median and 90th percentile of |V_U|/K over those failures.

    python scripts/conditional_stats.py --k-values 260:340:10 --out results/conditional.csv
"""

import argparse
from pathlib import Path

from verifcs.harness import ExperimentConfig, conditional_unidentified_stats, stats_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4095)
    ap.add_argument("--m", type=int, default=738)
    ap.add_argument("--deg", type=int, default=3)
    ap.add_argument("--k-values", default="260:340:10")
    ap.add_argument("--min-failures", type=int, default=1000)
    ap.add_argument("--max-trials", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/conditional.csv"))
    a = ap.parse_args()

    lo, hi, step = (int(v) for v in a.k_values.split(":"))
    ks = list(range(lo, hi + 1, step))
    cfg = ExperimentConfig(n=a.n, m=a.m, var_degree=a.deg, k=max(ks), trials=a.max_trials,
                           master_seed=a.seed, workers=a.workers)
    stats = conditional_unidentified_stats(cfg, ks, a.min_failures)
    text = stats_csv(stats)
    print(text, end="")
    for s in stats:
        if s.insufficient:
            print(f"# K={s.k}: only {s.failures} failures in {s.trials} trials")
    a.out.parent.mkdir(parents=True, exist_ok=True)
    a.out.write_text(text)


if __name__ == "__main__":
    main()
