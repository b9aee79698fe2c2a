"""Base-decoder failure probability against sparsity K.

    python scripts/waterfall.py --k-values 240:320:10 --trials 2000 --out results/waterfall.csv
"""

import argparse
from pathlib import Path

from verifcs.harness import ExperimentConfig, estimate_failure_probability


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4095)
    ap.add_argument("--m", type=int, default=738)
    ap.add_argument("--deg", type=int, default=3)
    ap.add_argument("--k-values", default="240:320:10", help="start:stop:step (inclusive) or comma list")
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/waterfall.csv"))
    a = ap.parse_args()

    if ":" in a.k_values:
        lo, hi, step = (int(v) for v in a.k_values.split(":"))
        ks = list(range(lo, hi + 1, step))
    else:
        ks = [int(v) for v in a.k_values.split(",")]

    rows = ["K,failures,trials,p_hat,ci_low,ci_high"]
    for k in ks:
        cfg = ExperimentConfig(n=a.n, m=a.m, var_degree=a.deg, k=k, trials=a.trials,
                               master_seed=a.seed, workers=a.workers)
        pt = estimate_failure_probability(cfg)
        rows.append(f"{k},{pt.failures},{pt.trials},{pt.p_hat!r},{pt.ci_low!r},{pt.ci_high!r}")
        print(rows[-1], flush=True)
    a.out.parent.mkdir(parents=True, exist_ok=True)
    a.out.write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
