"""Noisy completion benchmark (NRMSE on the unobserved entries).

    python scripts/table2.py [--grid scripts/grids/table2.json] [--out runs/table2]
"""

import argparse
from pathlib import Path

from lrtc.cli import BenchGrid, _write_rows, REPORT_FIELDS, TRIAL_FIELDS, format_report, run_bench

HERE = Path(__file__).resolve().parent

PUBLISHED_NRMSE = {
    "50-sr0.3-s0.02": 1.24e-2,
    "50-sr0.3-s0.04": 2.11e-2,
    "50-sr0.6-s0.02": 6.80e-3,
    "50-sr0.6-s0.04": 1.26e-2,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--grid", default=str(HERE / "grids" / "table2.json"))
    ap.add_argument("--out", default="runs/table2")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    report, trials = run_bench(BenchGrid.load(args.grid), jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "report.csv", REPORT_FIELDS, report)
    _write_rows(out / "trials.csv", TRIAL_FIELDS, trials)
    print(format_report(report))
    print()
    for r in report:
        pub = PUBLISHED_NRMSE.get(r["cell"])
        if pub is not None and r["completed"]:
            print(f"{r['cell']:<18} NRMSE {r['mean_nrmse']:.2e}   published {pub:.2e}   ratio {r['mean_nrmse'] / pub:.3f}")


if __name__ == "__main__":
    main()
