"""Noiseless completion benchmark; prints measured rows beside the published ones.

    python scripts/table1.py [--grid scripts/grids/table1_small.json] [--out runs/table1] [--jobs 1]
"""

import argparse
from pathlib import Path

from lrtc.cli import BenchGrid, _write_rows, REPORT_FIELDS, TRIAL_FIELDS, format_report, run_bench

HERE = Path(__file__).resolve().parent

# published (iterations, rel.err) for the same cells
PUBLISHED = {
    "3way-50-sr0.3": (70, 8.45e-8),
    "3way-50-sr0.6": (35, 8.35e-9),
    "3way-100-sr0.3": (67, 9.97e-9),
    "3way-100-sr0.6": (33, 4.77e-9),
    "4way-sr0.3": (74, 2.25e-8),
    "4way-sr0.6": (35, 5.11e-9),
    "5way-sr0.3": (72, 9.46e-9),
    "5way-sr0.6": (35, 5.88e-9),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--grid", default=str(HERE / "grids" / "table1_small.json"))
    ap.add_argument("--out", default="runs/table1")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    report, trials = run_bench(BenchGrid.load(args.grid), jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "report.csv", REPORT_FIELDS, report)
    _write_rows(out / "trials.csv", TRIAL_FIELDS, trials)
    print(format_report(report))
    print()
    print(f"{'cell':<18}{'iter':>8}{'pub.iter':>10}{'rel.err':>11}{'pub.rel.err':>13}")
    for r in report:
        pub = PUBLISHED.get(r["cell"])
        if pub is None or r["completed"] == 0:
            continue
        print(f"{r['cell']:<18}{r['mean_iter']:>8.1f}{pub[0]:>10d}{r['mean_rel_err']:>11.2e}{pub[1]:>13.2e}")


if __name__ == "__main__":
    main()
