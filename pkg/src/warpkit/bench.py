"""Benchmark and validation harness.

Runs the sparse kernels over a MatrixMarket corpus on selected executors,
checks every result against the sequential reference, and reports
instrumentation-based cost metrics. Wall time is recorded for information
only: host timings of a simulator say nothing about devices, so lane-step
and shuffle counts are the portable comparison metrics. Results land in
``results.csv`` plus a ``ratios.svg`` scatter (ratio vs nonzeros, log x,
one series per kernel, unit line for reference).
"""

import argparse
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels as _kernels  # populates the operation registry
from .dispatch import CLI_EXEC_NAMES, dispatch, instrumentation_report, make_executor
from .errors import MissingPair, WarpkitError
from .sparse import coo_to_csr, coo_to_sellp, read_matrix_market

REL_TOL = 1e-10
CSV_HEADER = "matrix,nrows,nnz,kernel,exec,correct,max_rel_err,lane_steps,shuffles,atomics,wall_time_ns"
KERNEL_CHOICES = ("coo", "csr", "sellp", "cg")
_METRICS = ("lane_steps", "shuffles", "wall_time")
_CG_TOL = 1e-12
_CG_ITERS = 1000
_SLICE_SIZE = 64

_KERNEL_COLORS = {
    "coo": "#1f77b4",
    "csr": "#ff7f0e",
    "sellp": "#2ca02c",
    "cg": "#d62728",
}


def max_scaled_rel_err(y, reference, row_nnz) -> float:
    """Max-norm error of ``y`` against ``reference``, scaled per row by the
    row's nonzero count and the reference magnitude."""
    y = np.asarray(y, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if y.shape != reference.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {reference.shape}")
    if len(y) == 0:
        return 0.0
    scale = np.maximum(np.asarray(row_nnz, dtype=np.float64), 1.0) * np.maximum(np.abs(reference), 1.0)
    return float(np.max(np.abs(y - reference) / scale))


@dataclass(frozen=True)
class BenchConfig:
    corpus: object
    kernels: tuple = ("coo", "csr", "sellp")
    execs: tuple = ("ref", "warp32", "warp64")
    warmup_iters: int = 2
    timed_iters: int = 10
    inner_loops: int = 1000
    seed: int = 42
    strict: bool = False
    scramble: bool = False
    ratio_metric: str = "lane_steps"

    def __post_init__(self):
        if self.warmup_iters < 0:
            raise ValueError("warmup_iters must be >= 0")
        if self.timed_iters < 1:
            raise ValueError("timed_iters must be >= 1")
        unknown = set(self.kernels) - set(KERNEL_CHOICES)
        if unknown:
            raise ValueError(f"unknown kernels {sorted(unknown)}; choose from {KERNEL_CHOICES}")
        bad = [e for e in self.execs if e not in CLI_EXEC_NAMES]
        if bad:
            raise ValueError(f"unknown executors {bad}; choose from {sorted(CLI_EXEC_NAMES)}")
        if self.ratio_metric not in _METRICS:
            raise ValueError(f"ratio_metric must be one of {_METRICS}")
        object.__setattr__(self, "kernels", tuple(self.kernels))
        object.__setattr__(self, "execs", tuple(self.execs))


@dataclass(frozen=True)
class BenchRecord:
    matrix: str
    nrows: int
    nnz: int
    kernel: str
    exec: str
    correct: bool
    max_rel_err: float
    lane_steps: int
    shuffles: int
    atomics: int
    wall_time_ns: int

    def csv_row(self) -> str:
        return ",".join([
            self.matrix,
            str(self.nrows),
            str(self.nnz),
            self.kernel,
            self.exec,
            "true" if self.correct else "false",
            format(self.max_rel_err, ".17g"),
            str(self.lane_steps),
            str(self.shuffles),
            str(self.atomics),
            str(self.wall_time_ns),
        ])


@dataclass(frozen=True)
class RatioPoint:
    matrix: str
    kernel: str
    nnz: int
    ratio: float


@dataclass(frozen=True)
class RatioSummary:
    """Distribution of per-(matrix, kernel) metric ratios exec_a / exec_b."""

    metric: str
    exec_a: str
    exec_b: str
    points: tuple
    mean: float
    median: float
    band_p50: tuple
    band_p90: tuple
    within_3pct: float
    within_10pct: float


@dataclass
class BenchResult:
    records: list
    skipped: list = field(default_factory=list)


def _quantile(sorted_vals, f):
    n = len(sorted_vals)
    if n == 1:
        return sorted_vals[0]
    pos = f * (n - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    return sorted_vals[lo] * (1.0 - frac) + sorted_vals[hi] * frac


def compute_ratio_stats(records, metric: str, a: str, b: str) -> RatioSummary:
    """Per-pair ratios metric(a)/metric(b) with the reporting bands."""
    if metric not in _METRICS:
        raise ValueError(f"metric must be one of {_METRICS}")
    column = "wall_time_ns" if metric == "wall_time" else metric
    table = {}
    for rec in records:
        table.setdefault((rec.matrix, rec.kernel), {})[rec.exec] = rec
    points = []
    for (matrix, kernel), by_exec in sorted(table.items()):
        if a not in by_exec or b not in by_exec:
            raise MissingPair(f"pair ({matrix}, {kernel}) lacks executor {a if a not in by_exec else b}")
        num = getattr(by_exec[a], column)
        den = getattr(by_exec[b], column)
        if den == 0:
            ratio = 1.0 if num == 0 else math.inf
        else:
            ratio = num / den
        points.append(RatioPoint(matrix, kernel, by_exec[a].nnz, ratio))
    if not points:
        raise MissingPair("no (matrix, kernel) pairs in records")
    ratios = sorted(p.ratio for p in points)
    n = len(ratios)
    return RatioSummary(
        metric=metric,
        exec_a=a,
        exec_b=b,
        points=tuple(points),
        mean=sum(ratios) / n,
        median=_quantile(ratios, 0.5),
        band_p50=(_quantile(ratios, 0.25), _quantile(ratios, 0.75)),
        band_p90=(_quantile(ratios, 0.05), _quantile(ratios, 0.95)),
        within_3pct=sum(1 for r in ratios if abs(r - 1.0) <= 0.03) / n,
        within_10pct=sum(1 for r in ratios if abs(r - 1.0) <= 0.10) / n,
    )


# -- running ------------------------------------------------------------------


def _timed_dispatch(name, executor, cfg, *args):
    for _ in range(cfg.warmup_iters):
        dispatch(name, executor, *args)
    times = []
    result = None
    for _ in range(cfg.timed_iters):
        t0 = time.perf_counter_ns()
        result = dispatch(name, executor, *args)
        times.append(time.perf_counter_ns() - t0)
    return result, instrumentation_report(executor), int(sum(times) / len(times))


def run_benchmark(cfg: BenchConfig) -> BenchResult:
    """One record per (matrix, kernel, exec); correctness judged against the
    sequential reference. Ingest failures are skipped and reported."""
    corpus = Path(cfg.corpus)
    files = sorted(corpus.glob("*.mtx"))
    if not files:
        raise ValueError(f"corpus {corpus} contains no .mtx files")
    executors = {name: make_executor(name, seed=cfg.seed, scramble=cfg.scramble) for name in cfg.execs}
    oracle = make_executor("ref", seed=cfg.seed)
    records = []
    skipped = []
    for path in files:
        try:
            coo = read_matrix_market(path)
        except WarpkitError as exc:
            skipped.append((path.name, str(exc)))
            continue
        name = path.stem
        forms = {"coo": coo}
        if "csr" in cfg.kernels:
            forms["csr"] = coo_to_csr(coo)
        if "sellp" in cfg.kernels or "cg" in cfg.kernels:
            forms["sellp"] = coo_to_sellp(coo, _SLICE_SIZE)
        row_nnz = coo.row_nnz()
        rng = np.random.default_rng(cfg.seed)
        x = rng.random(coo.ncols)
        for kernel in cfg.kernels:
            if kernel == "cg":
                if coo.nrows != coo.ncols or not coo.is_symmetric():
                    skipped.append((path.name, "cg skipped: matrix is not symmetric"))
                    continue
                b = np.ones(coo.nrows)
                ref_x, ref_hist = dispatch("cg", oracle, forms["sellp"], b, _CG_TOL, _CG_ITERS)
                for exec_name, executor in executors.items():
                    (sol, hist), counters, wall = _timed_dispatch(
                        "cg", executor, cfg, forms["sellp"], b, _CG_TOL, _CG_ITERS
                    )
                    err = max_scaled_rel_err(sol, ref_x, row_nnz)
                    records.append(BenchRecord(
                        matrix=name, nrows=coo.nrows, nnz=coo.nnz, kernel=kernel,
                        exec=exec_name, correct=bool(err <= REL_TOL and len(hist) == len(ref_hist)),
                        max_rel_err=err, lane_steps=counters.lane_steps,
                        shuffles=counters.shuffles, atomics=counters.atomics, wall_time_ns=wall,
                    ))
                continue
            op = f"spmv_{kernel}"
            reference = dispatch(op, oracle, forms[kernel], x)
            for exec_name, executor in executors.items():
                y, counters, wall = _timed_dispatch(op, executor, cfg, forms[kernel], x)
                err = max_scaled_rel_err(y, reference, row_nnz)
                records.append(BenchRecord(
                    matrix=name, nrows=coo.nrows, nnz=coo.nnz, kernel=kernel,
                    exec=exec_name, correct=bool(err <= REL_TOL), max_rel_err=err,
                    lane_steps=counters.lane_steps, shuffles=counters.shuffles,
                    atomics=counters.atomics, wall_time_ns=wall,
                ))
    records.sort(key=lambda r: (r.matrix, r.kernel, r.exec))
    return BenchResult(records=records, skipped=skipped)


def run_reduce_microbench(exec_name: str, size: int, inner_loops: int, *, seed: int = 42):
    """Shuffle-event counts for ``inner_loops`` subwarp reductions.

    Mirrors the trip-count differencing protocol: running this at two trip
    counts and subtracting isolates the per-reduction cost, which here is an
    exact ``log2(size)`` shuffle events per participating subwarp per trip.
    """
    executor = make_executor(exec_name, seed=seed)
    result = dispatch("reduce_microbench", executor, size, inner_loops)
    return result, instrumentation_report(executor)


# -- output -------------------------------------------------------------------


def _render_csv(records) -> str:
    lines = [CSV_HEADER]
    for rec in sorted(records, key=lambda r: (r.matrix, r.kernel, r.exec)):
        lines.append(rec.csv_row())
    return "\n".join(lines) + "\n"


def _svg_escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _render_ratio_svg(summary: Optional[RatioSummary]) -> str:
    width, height = 820, 520
    left, right, top, bottom = 70, 180, 50, 60
    plot_w = width - left - right
    plot_h = height - top - bottom
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if summary is None or not summary.points:
        parts.append(f'<text x="{width / 2:.1f}" y="{height / 2:.1f}" text-anchor="middle" '
                     'font-family="sans-serif" font-size="14">no ratio pairs</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    xs = [math.log10(max(p.nnz, 1)) for p in summary.points]
    ys = [p.ratio for p in summary.points]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi - x_lo < 1e-9:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    y_lo = min(min(ys), 1.0)
    y_hi = max(max(ys), 1.0)
    pad = max((y_hi - y_lo) * 0.1, 0.05)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return top + (y_hi - v) / (y_hi - y_lo) * plot_h

    title = (f"{summary.metric} ratio {summary.exec_a}/{summary.exec_b} "
             f"(median {summary.median:.3f}, {summary.within_3pct * 100:.0f}% within 3%, "
             f"{summary.within_10pct * 100:.0f}% within 10%)")
    parts.append(f'<text x="{left}" y="24" font-family="sans-serif" font-size="14">{_svg_escape(title)}</text>')
    parts.append(f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
                 'fill="none" stroke="#333" stroke-width="1"/>')
    # x ticks at integer decades
    for d in range(math.floor(x_lo), math.floor(x_hi) + 1):
        if x_lo <= d <= x_hi:
            parts.append(f'<line x1="{sx(d):.2f}" y1="{top + plot_h}" x2="{sx(d):.2f}" '
                         f'y2="{top + plot_h + 5}" stroke="#333"/>')
            parts.append(f'<text x="{sx(d):.2f}" y="{top + plot_h + 20}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="11">1e{d}</text>')
    parts.append(f'<text x="{left + plot_w / 2:.2f}" y="{height - 16}" text-anchor="middle" '
                 'font-family="sans-serif" font-size="12">nonzeros</text>')
    # y ticks
    for i in range(6):
        v = y_lo + (y_hi - y_lo) * i / 5
        parts.append(f'<line x1="{left - 5}" y1="{sy(v):.2f}" x2="{left}" y2="{sy(v):.2f}" stroke="#333"/>')
        parts.append(f'<text x="{left - 9}" y="{sy(v) + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{v:.3f}</text>')
    # unit line
    parts.append(f'<line x1="{left}" y1="{sy(1.0):.2f}" x2="{left + plot_w}" y2="{sy(1.0):.2f}" '
                 'stroke="#888" stroke-dasharray="5,4" stroke-width="1"/>')
    for point in summary.points:
        color = _KERNEL_COLORS.get(point.kernel, "#555555")
        parts.append(
            f'<circle class="pt" data-matrix="{_svg_escape(point.matrix)}" data-kernel="{point.kernel}" '
            f'cx="{sx(math.log10(max(point.nnz, 1))):.2f}" cy="{sy(point.ratio):.2f}" r="4" '
            f'fill="{color}" fill-opacity="0.75"/>'
        )
    legend_y = top + 10
    for kernel in sorted({p.kernel for p in summary.points}):
        color = _KERNEL_COLORS.get(kernel, "#555555")
        parts.append(f'<circle cx="{left + plot_w + 18}" cy="{legend_y}" r="5" fill="{color}"/>')
        parts.append(f'<text x="{left + plot_w + 30}" y="{legend_y + 4}" '
                     f'font-family="sans-serif" font-size="12">{kernel}</text>')
        legend_y += 20
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _write_atomic(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def emit_outputs(records, summary: Optional[RatioSummary], out_dir) -> list:
    """Write results.csv and ratios.svg; refuses to leave partial output."""
    if not records:
        raise ValueError("no records to emit")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_text = _render_csv(records)
    svg_text = _render_ratio_svg(summary)
    csv_path = out_dir / "results.csv"
    svg_path = out_dir / "ratios.svg"
    _write_atomic(csv_path, csv_text)
    _write_atomic(svg_path, svg_text)
    return [csv_path, svg_path]


# -- CLI ----------------------------------------------------------------------


def _pick_ratio_pair(execs):
    if "warp64" in execs and "warp32" in execs:
        return "warp64", "warp32"
    if len(execs) >= 2:
        return execs[1], execs[0]
    return None


def _format_summary(summary: RatioSummary) -> str:
    return (
        f"ratio {summary.metric} {summary.exec_a}/{summary.exec_b}: n={len(summary.points)} "
        f"mean={summary.mean:.4f} median={summary.median:.4f} "
        f"p50-band=[{summary.band_p50[0]:.4f}, {summary.band_p50[1]:.4f}] "
        f"p90-band=[{summary.band_p90[0]:.4f}, {summary.band_p90[1]:.4f}] "
        f"within3%={summary.within_3pct * 100:.1f}% within10%={summary.within_10pct * 100:.1f}%"
    )


def _reduce_bench_main(args) -> int:
    sizes_by_ws = {"warp32": 32, "warp64": 64}
    for exec_name in args.execs:
        if exec_name not in sizes_by_ws:
            continue
        ws = sizes_by_ws[exec_name]
        print(f"reduce microbench on {exec_name} (inner_loops={args.inner_loops}):")
        counts = {}
        size = 4
        while size <= ws:
            _, lo = run_reduce_microbench(exec_name, size, args.inner_loops, seed=args.seed)
            _, hi = run_reduce_microbench(exec_name, size, 2 * args.inner_loops, seed=args.seed)
            per_trip = (hi.shuffles - lo.shuffles) / args.inner_loops
            counts[size] = lo.shuffles
            print(f"  size={size:3d}: shuffle_events={lo.shuffles} per-trip={per_trip:.1f} "
                  f"(log2(size)={int(math.log2(size))} per subwarp)")
            size *= 2
        if 4 in counts and ws in counts:
            ratio = (math.log2(4) / math.log2(ws))
            print(f"  op-count ratio size4/size{ws} = {ratio:.3f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Cross-backend sparse kernel benchmark and validation harness.",
    )
    parser.add_argument("--corpus", help="directory of MatrixMarket .mtx files")
    parser.add_argument("--kernels", default="coo,csr,sellp",
                        help="comma list from coo,csr,sellp,cg")
    parser.add_argument("--execs", default="ref,warp32,warp64",
                        help="comma list from ref,warp32,warp64")
    parser.add_argument("--warmup", type=int, default=2, dest="warmup")
    parser.add_argument("--iters", type=int, default=10)
    parser.add_argument("--inner-loops", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--strict", action="store_true",
                        help="exit nonzero if any record is incorrect")
    parser.add_argument("--scramble", action="store_true",
                        help="permute the atomic application order every scheduler round")
    parser.add_argument("--ratio-metric", default="lane_steps", choices=_METRICS)
    parser.add_argument("--reduce-bench", action="store_true",
                        help="run the subwarp reduction op-count microbenchmark and exit")
    parser.add_argument("--out", help="output directory for results.csv and ratios.svg")
    args = parser.parse_args(argv)
    args.execs = [e.strip() for e in args.execs.split(",") if e.strip()]

    if args.reduce_bench:
        return _reduce_bench_main(args)
    if not args.corpus or not args.out:
        parser.error("--corpus and --out are required (unless --reduce-bench)")

    cfg = BenchConfig(
        corpus=args.corpus,
        kernels=tuple(k.strip() for k in args.kernels.split(",") if k.strip()),
        execs=tuple(args.execs),
        warmup_iters=args.warmup,
        timed_iters=args.iters,
        inner_loops=args.inner_loops,
        seed=args.seed,
        strict=args.strict,
        scramble=args.scramble,
        ratio_metric=args.ratio_metric,
    )
    result = run_benchmark(cfg)
    for name, reason in result.skipped:
        print(f"skipped {name}: {reason}")
    if not result.records:
        print("error: no matrix produced any record")
        return 1
    summary = None
    pair = _pick_ratio_pair(cfg.execs)
    if pair is not None:
        try:
            summary = compute_ratio_stats(result.records, cfg.ratio_metric, *pair)
        except MissingPair as exc:
            print(f"note: ratio statistics unavailable ({exc})")
    paths = emit_outputs(result.records, summary, args.out)
    for path in paths:
        print(f"wrote {path}")
    if summary is not None:
        print(_format_summary(summary))
    bad = [r for r in result.records if not r.correct]
    print(f"{len(result.records)} records, {len(bad)} incorrect, {len(result.skipped)} skipped")
    if bad and cfg.strict:
        for rec in bad:
            print(f"INCORRECT {rec.matrix} {rec.kernel} {rec.exec} max_rel_err={rec.max_rel_err:.3e}")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
