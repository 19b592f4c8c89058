"""Command-line front end: ``lrtc gen | solve | bench | inpaint``.

Shapes are ``x``-separated extents (``50x50x50``), ranks comma-separated
(``9,9,3``). Exit codes: 0 converged, 2 hit max-iter, 3 numerical error,
64 usage or specification error, 65 unreadable input file.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import io as lio
from .errors import FormatError, LRTCError, MetricError, SpecError
from .problems import ProblemSpec, gen_lowrank, nrmse, rel_err
from .solver import SolverConfig, Status, solve
from .tensor import DenseTensor

EXIT_OK = 0
EXIT_MAX_ITER = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64
EXIT_DATA = 65

STATUS_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.MAX_ITER: EXIT_MAX_ITER,
    Status.NUMERICAL_ERROR: EXIT_NUMERICAL,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_shape(text: str):
    try:
        dims = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad shape {text!r}; expected e.g. 50x50x50") from None
    if not dims or any(d < 1 for d in dims):
        raise UsageError(f"bad shape {text!r}; extents must be positive")
    return dims


def parse_ranks(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(r) for r in text)
    try:
        return tuple(int(p) for p in str(text).split(","))
    except ValueError:
        raise UsageError(f"bad ranks {text!r}; expected e.g. 9,9,3") from None


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--beta0", type=float, default=0.1)
    g.add_argument("--rho", type=float, default=5.0)
    g.add_argument("--tol", type=float, default=1e-8)
    g.add_argument("--eps", type=float, default=None, help="default: 1e-3 if sr > 0.5 else 1e-4")
    g.add_argument("--max-iter", type=int, default=1000)
    g.add_argument("--beta-max", type=float, default=1e12)
    g.add_argument("--workers", type=int, default=1, help="threads for the per-mode updates")


def _config(args) -> SolverConfig:
    return SolverConfig(
        beta0=args.beta0,
        rho=args.rho,
        tol=args.tol,
        eps=args.eps,
        max_iter=args.max_iter,
        beta_max=args.beta_max,
    )


def _config_echo(cfg: SolverConfig, eps: float) -> Dict[str, Any]:
    d = asdict(cfg)
    d["eps"] = eps
    return d


# ---------------------------------------------------------------- gen


def cmd_gen(args) -> int:
    spec = ProblemSpec(parse_shape(args.shape), parse_ranks(args.ranks), args.sr, args.sigma, args.seed)
    prob = gen_lowrank(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lio.write_tensor(out / "truth.mrt", prob.truth)
    lio.write_tensor(out / "observed.mrt", prob.observed)
    lio.write_mask(out / "mask.mrm", prob.mask)
    dims = "x".join(map(str, spec.shape))
    print(
        f"gen shape={dims} ranks={','.join(map(str, spec.ranks))} sr={spec.sampling_ratio:g} "
        f"sigma={spec.noise_sigma:g} seed={spec.seed} observed={prob.mask.size}/{prob.mask.total} "
        f"-> {out}"
    )
    return EXIT_OK


# ---------------------------------------------------------------- solve


def cmd_solve(args) -> int:
    truth = lio.read_tensor(args.truth) if args.truth else None
    if args.shape:
        shape = parse_shape(args.shape)
        if truth is not None and truth.shape != shape:
            raise UsageError(f"--shape {args.shape} disagrees with truth shape {truth.shape}")
    elif truth is not None:
        shape = truth.shape
    else:
        raise UsageError("the mask file carries no shape; pass --shape or --truth")
    mask = lio.read_mask(args.mask, shape)
    cfg = _config(args)

    t0 = time.perf_counter()
    res = solve(mask, cfg, workers=args.workers)
    wall_ms = (time.perf_counter() - t0) * 1e3

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lio.write_tensor(out / "x.mrt", res.x)
    lio.write_trace_csv(res.trace, out / "trace.csv", n_modes=len(shape))

    err = nr = None
    if truth is not None:
        err = rel_err(res.x, truth)
        try:
            nr = nrmse(res.x, truth, mask)
        except MetricError:
            nr = None
    summary = lio.RunSummary(
        shape=shape,
        sampling_ratio=mask.sampling_ratio,
        config=_config_echo(cfg, res.eps),
        iterations=res.iterations,
        status=res.status.value,
        wall_ms=wall_ms,
        rel_err=err,
        nrmse=nr,
    )
    lio.write_summary_json(summary, out / "summary.json")
    line = f"solve status={res.status.value} iter={res.iterations} time={wall_ms / 1e3:.2f}s"
    if err is not None:
        line += f" rel_err={err:.3e}"
    if nr is not None:
        line += f" nrmse={nr:.3e}"
    if res.message:
        line += f" ({res.message})"
    print(line)
    return STATUS_EXIT[res.status]


# ---------------------------------------------------------------- bench


@dataclass
class BenchCell:
    shape: tuple
    ranks: tuple
    sr: float
    sigma: float = 0.0
    trials: int = 1
    name: str = ""
    config: Dict[str, Any] = field(default_factory=dict)


@dataclass
class BenchGrid:
    """Cells to sweep; trial ``t`` of every cell uses seed ``base_seed + t``."""

    cells: List[BenchCell]
    base_seed: int = 0
    config: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "BenchGrid":
        cells = []
        for i, c in enumerate(d["cells"]):
            shape = parse_shape(c["shape"]) if isinstance(c["shape"], str) else tuple(c["shape"])
            trials = int(c.get("trials", d.get("trials", 1)))
            if trials < 1:
                raise UsageError(f"cell {i}: trials must be >= 1")
            cells.append(
                BenchCell(
                    shape=shape,
                    ranks=parse_ranks(c["ranks"]),
                    sr=float(c["sr"]),
                    sigma=float(c.get("sigma", 0.0)),
                    trials=trials,
                    name=str(c.get("name", f"cell{i}")),
                    config=dict(c.get("config", {})),
                )
            )
        return cls(cells, int(d.get("base_seed", 0)), dict(d.get("config", {})))

    @classmethod
    def load(cls, path) -> "BenchGrid":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"cannot parse grid file {path}: {exc!r}") from None


def run_trial(cell: BenchCell, seed: int, base_config: Dict[str, Any]) -> Dict[str, Any]:
    """Generate and solve one problem; errors are returned, not raised."""
    row: Dict[str, Any] = {"cell": cell.name, "seed": seed}
    try:
        cfg = SolverConfig(**{**base_config, **cell.config})
        prob = gen_lowrank(ProblemSpec(cell.shape, cell.ranks, cell.sr, cell.sigma, seed))
        t0 = time.perf_counter()
        res = solve(prob.mask, cfg)
        row["time_s"] = time.perf_counter() - t0
        row["iterations"] = res.iterations
        row["status"] = res.status.value
        row["rel_err"] = rel_err(res.x, prob.truth)
        try:
            row["nrmse"] = nrmse(res.x, prob.truth, prob.mask)
        except MetricError:
            row["nrmse"] = float("nan")
    except LRTCError as exc:
        row["status"] = "error"
        row["error"] = str(exc)
    return row


def _mean(rows, key):
    vals = [r[key] for r in rows if key in r]
    return float(np.mean(vals)) if vals else float("nan")


def aggregate(cell: BenchCell, rows: List[Dict[str, Any]]) -> Dict[str, Any]:
    ok = [r for r in rows if r["status"] != "error"]
    agg = {
        "cell": cell.name,
        "shape": "x".join(map(str, cell.shape)),
        "ranks": ",".join(map(str, cell.ranks)),
        "sr": cell.sr,
        "sigma": cell.sigma,
        "trials": cell.trials,
        "completed": len(ok),
        "mean_iter": _mean(ok, "iterations"),
        "mean_rel_err": _mean(ok, "rel_err"),
        "mean_nrmse": _mean(ok, "nrmse"),
        "mean_time_s": _mean(ok, "time_s"),
        "status": "ok" if len(ok) == len(rows) else ("error" if not ok else "partial"),
        "error": next((r["error"] for r in rows if "error" in r), ""),
    }
    return agg


REPORT_FIELDS = [
    "cell", "shape", "ranks", "sr", "sigma", "trials", "completed",
    "mean_iter", "mean_rel_err", "mean_nrmse", "mean_time_s", "status", "error",
]
TRIAL_FIELDS = ["cell", "seed", "status", "iterations", "rel_err", "nrmse", "time_s", "error"]


def format_report(rows: List[Dict[str, Any]]) -> str:
    head = f"{'cell':<18}{'shape':<16}{'ranks':<12}{'sr':>5}{'sigma':>7}{'iter':>8}{'rel.err':>11}{'NRMSE':>11}{'time(s)':>9}  status"
    lines = [head, "-" * len(head)]
    for r in rows:
        if r["completed"] == 0:
            lines.append(f"{r['cell']:<18}{r['shape']:<16}{r['ranks']:<12}{r['sr']:>5g}{r['sigma']:>7g}  error: {r['error']}")
            continue
        lines.append(
            f"{r['cell']:<18}{r['shape']:<16}{r['ranks']:<12}{r['sr']:>5g}{r['sigma']:>7g}"
            f"{r['mean_iter']:>8.1f}{r['mean_rel_err']:>11.2e}{r['mean_nrmse']:>11.2e}"
            f"{r['mean_time_s']:>9.2f}  {r['status']}"
        )
    return "\n".join(lines)


def run_bench(grid: BenchGrid, jobs: int = 1):
    tasks = [(cell, grid.base_seed + t) for cell in grid.cells for t in range(cell.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futures = [ex.submit(run_trial, c, s, grid.config) for c, s in tasks]
            results = [f.result() for f in futures]
    else:
        results = [run_trial(c, s, grid.config) for c, s in tasks]
    trials, report, pos = [], [], 0
    for cell in grid.cells:
        rows = results[pos:pos + cell.trials]
        pos += cell.trials
        trials.extend(rows)
        report.append(aggregate(cell, rows))
    return report, trials


def _write_rows(path, fields, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in r.items()})


def cmd_bench(args) -> int:
    grid = BenchGrid.load(args.grid)
    if args.base_seed is not None:
        grid.base_seed = args.base_seed
    report, trials = run_bench(grid, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "report.csv", REPORT_FIELDS, report)
    _write_rows(out / "trials.csv", TRIAL_FIELDS, trials)
    text = format_report(report)
    (out / "report.txt").write_text(text + "\n")
    print(text)
    return EXIT_OK


# ---------------------------------------------------------------- inpaint


def cmd_inpaint(args) -> int:
    image = lio.read_image(args.image)
    rule = lio.parse_rule(args.rule)
    mask = lio.mask_from_image(image, rule)
    cfg = _config(args)

    t0 = time.perf_counter()
    res = solve(mask, cfg, workers=args.workers)
    wall_ms = (time.perf_counter() - t0) * 1e3

    restored = lio.ImageTensor(res.x, source=image.source, depth=image.depth)
    lio.write_image(args.out, restored)
    if args.masked:
        shown = np.zeros(image.tensor.size)
        shown[mask.indices] = mask.values
        lio.write_image(args.masked, DenseTensor.from_flat(shown, image.tensor.shape), depth=image.depth)
    if args.trace:
        lio.write_trace_csv(res.trace, args.trace, n_modes=3)

    if args.original:
        reference = lio.read_image(args.original).tensor
    elif isinstance(rule, (lio.RandomRule, lio.PixelwiseRandomRule)):
        reference = image.tensor
    else:
        reference = None
    err = None
    if reference is not None:
        if reference.shape != image.tensor.shape:
            raise UsageError(f"original shape {reference.shape} differs from image shape {image.tensor.shape}")
        quantized = lio.read_image(args.out).tensor if Path(args.out).suffix.lower() in (".ppm", ".pnm", ".png") else res.x
        err = rel_err(quantized, reference)

    if args.summary:
        summary = lio.RunSummary(
            shape=image.tensor.shape,
            sampling_ratio=mask.sampling_ratio,
            config=_config_echo(cfg, res.eps),
            iterations=res.iterations,
            status=res.status.value,
            wall_ms=wall_ms,
            rel_err=err,
        )
        lio.write_summary_json(summary, args.summary)
    line = (
        f"inpaint {image.height}x{image.width} known={mask.sampling_ratio:.4f} "
        f"status={res.status.value} iter={res.iterations} time={wall_ms / 1e3:.2f}s"
    )
    if err is not None:
        line += f" rel_err={err:.3e}"
    print(line)
    return STATUS_EXIT[res.status]


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lrtc", description="Low multilinear-rank tensor completion by SALM.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a random low multilinear-rank problem")
    g.add_argument("--shape", required=True)
    g.add_argument("--ranks", required=True)
    g.add_argument("--sr", type=float, required=True, help="sampling ratio in (0, 1]")
    g.add_argument("--sigma", type=float, default=0.0, help="noise standard deviation")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".", help="output directory")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="complete a tensor from a mask file")
    s.add_argument("mask")
    s.add_argument("--shape", help="tensor shape (required unless --truth is given)")
    s.add_argument("--truth", help="ground truth tensor for rel.err / NRMSE")
    s.add_argument("--out", default=".", help="output directory")
    _add_config_flags(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark grid")
    b.add_argument("grid", help="JSON grid file")
    b.add_argument("--out", default="bench-out")
    b.add_argument("--base-seed", type=int, default=None, help="override the grid's base seed")
    b.add_argument("--jobs", type=int, default=1, help="trials solved in parallel processes")
    b.set_defaults(func=cmd_bench)

    i = sub.add_parser("inpaint", help="fill missing pixels of a colour image")
    i.add_argument("image")
    i.add_argument("--rule", required=True, help="random:SR[:SEED] | pixel:SR[:SEED] | sentinel:R,G,B")
    i.add_argument("--out", required=True, help="restored image (.ppm native, .png via Pillow)")
    i.add_argument("--original", help="complete image to measure rel.err against")
    i.add_argument("--masked", help="also write the input with missing entries blacked out")
    i.add_argument("--trace", help="trace CSV path")
    i.add_argument("--summary", help="summary JSON path")
    _add_config_flags(i)
    i.set_defaults(func=cmd_inpaint)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, SpecError) as exc:
        print(f"lrtc {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        print(f"lrtc {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LRTCError as exc:
        print(f"lrtc {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
