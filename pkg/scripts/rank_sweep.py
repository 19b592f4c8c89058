"""Iterations and time versus multilinear rank on 40x40x40 tensors at sr = 0.5.

Writes the aggregated sweep and reports whether iterations and time grow
with the rank (no published numbers are compared).

    python scripts/rank_sweep.py [--out runs/rank_sweep] [--trials 3]
"""

import argparse
from pathlib import Path

from lrtc.cli import BenchCell, BenchGrid, _write_rows, REPORT_FIELDS, format_report, run_bench


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="runs/rank_sweep")
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--base-seed", type=int, default=0)
    args = ap.parse_args()

    cells = [BenchCell((40, 40, 40), (r, r, r), 0.5, trials=args.trials, name=f"r{r}") for r in range(2, 15, 2)]
    report, _ = run_bench(BenchGrid(cells, args.base_seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "report.csv", REPORT_FIELDS, report)
    print(format_report(report))

    iters = [r["mean_iter"] for r in report]
    times = [r["mean_time_s"] for r in report]
    rising = lambda xs: all(b >= a for a, b in zip(xs, xs[1:]))  # noqa: E731
    print(f"\niterations non-decreasing in r: {rising(iters)}")
    print(f"time non-decreasing in r:       {rising(times)}")


if __name__ == "__main__":
    main()
