"""Command-line entry point.

Every flag can also be given through an environment variable named
``HSDPA_TSP_<FLAG>`` (for example ``HSDPA_TSP_JOBS=4``); flags win.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import os
import statistics
import sys
import time
from pathlib import Path

from . import config as cfgio
from .engine import map_runs, run
from .oracle import compare_with_sim, default_grid, grid_cells
from .tsp_buffer import Variant

ENV_PREFIX = "HSDPA_TSP_"
TRACE_HEADERS = {
    "radio": "time_s,distance_m,sinr_actual_db,sinr_stale_db,scheme,tbs_bits,outcome",
    "grants": "time_s,aveq_pdus,level,max_pdus",
    "iub": "time_s,flow,pdus,credits_remaining",
    "packets": "time_s,flow,bits",
}


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name.upper(), default)


def _load(args) -> cfgio.Scenario:
    if args.scenario:
        return cfgio.load_scenario(args.scenario)
    return cfgio.default_scenario()


def _seeds(args, scenario):
    return [args.seed] if args.seed is not None else scenario.seeds


def _write_csv(reports, args, scenario):
    if args.out:
        cfgio.write_results(reports, args.out, scenario.name)
        print(f"wrote {len(reports)} rows to {args.out}", file=sys.stderr)
    else:
        cfgio.write_results(reports, sys.stdout, scenario.name)


def cmd_run(args) -> int:
    scenario = _load(args)
    base = next(scenario.runs(_seeds(args, scenario)))
    with contextlib.ExitStack() as stack:
        traces = {}
        if args.trace_dir:
            d = Path(args.trace_dir)
            d.mkdir(parents=True, exist_ok=True)
            for name, header in TRACE_HEADERS.items():
                fh = stack.enter_context(open(d / f"{name}.csv", "w", encoding="utf-8"))
                fh.write(header + "\n")
                traces[name] = fh
        t0 = time.perf_counter()
        report = run(base, traces)
    print(report.summary())
    logging.info("run took %.1f s", time.perf_counter() - t0)
    if args.out:
        cfgio.write_results([report], args.out, scenario.name)
    return 0


def cmd_sweep(args) -> int:
    scenario = _load(args)
    reports = map_runs(list(scenario.runs(_seeds(args, scenario))), args.jobs)
    _write_csv(reports, args, scenario)
    return 0


def _mean(values):
    vals = [v for v in values if v is not None]
    return statistics.fmean(vals) if vals else None


def comparison_table(reports) -> str:
    rates = sorted({r.ftp_rate_kbps for r in reports})
    cols = [("nrt_loss", lambda r: r.nrt_loss_prob, "{:.2e}"),
            ("nrt_kbps", lambda r: r.nrt_throughput_kbps, "{:.1f}"),
            ("rt_loss", lambda r: r.rt_loss_prob, "{:.4f}"),
            ("rt_delay_ms", lambda r: r.rt_mean_delay_ms, "{:.3f}")]
    head = f"{'rate_kbps':>9}" + "".join(f" {name + '/O':>12} {name + '/E':>12}" for name, _, _ in cols)
    lines = [head]
    for rate in rates:
        cells = []
        for _, get, fmt in cols:
            for v in (Variant.ORIGINAL, Variant.ENHANCED):
                m = _mean(get(r) for r in reports if r.ftp_rate_kbps == rate and r.variant == v.value)
                cells.append(f" {'n/a' if m is None else fmt.format(m):>12}")
        lines.append(f"{rate:>9g}" + "".join(cells))
    return "\n".join(lines)


def cmd_compare(args) -> int:
    scenario = _load(args)
    if set(scenario.variants) != {Variant.ORIGINAL, Variant.ENHANCED}:
        print("compare needs scenario.variants = original, enhanced", file=sys.stderr)
        return 2
    reports = map_runs(list(scenario.runs(_seeds(args, scenario))), args.jobs)
    if args.out:
        cfgio.write_results(reports, args.out, scenario.name)
    print(comparison_table(reports))
    return 0


def cmd_oracle_check(args) -> int:
    grid = default_grid()
    if args.n:
        grid = [m for m in grid if m.n in set(args.n)]
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    failed = 0
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["n", "r", "p_rt", "p_nrt", "variant", "metric", "exact", "simulated",
                    "deviation", "bound", "z_binomial", "pass"])
        for k, model in enumerate(grid):
            for c in compare_with_sim(model, args.slots, seed=k + 1, r_offset=args.inject_r_offset):
                failed += not c.passed
                w.writerow([model.n, model.r, model.p_rt, model.p_nrt, model.variant.value, c.metric,
                            "" if c.exact is None else f"{c.exact:.6f}",
                            "" if c.simulated is None else f"{c.simulated:.6f}",
                            f"{c.deviation:.6f}", f"{c.bound:.6f}", f"{c.z_binomial:.2f}",
                            "pass" if c.passed else "FAIL"])
    finally:
        if args.out:
            out.close()
    print(f"oracle-check: {grid_cells(grid)} cells, {len(grid)} models, {failed} failing comparisons",
          file=sys.stderr)
    return 1 if failed else 0


def cmd_defaults(args) -> int:
    sys.stdout.write(cfgio.describe_defaults())
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default=_env("scenario"), help="scenario file")
    common.add_argument("--out", default=_env("out"), help="output CSV path (default stdout)")
    common.add_argument("--seed", type=int, default=_env("seed") and int(_env("seed")),
                        help="run this seed instead of the scenario's seed list")
    common.add_argument("--jobs", type=int, default=int(_env("jobs", "1")),
                        help="worker processes for independent runs")
    common.add_argument("--verbose", "-v", action="store_true",
                        default=_env("verbose", "") not in ("", "0", "false"))

    p = argparse.ArgumentParser(prog="hsdpa-tsp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="one run (first variant, rate and seed)")
    r.add_argument("--trace-dir", help="write radio/grant/Iub/packet trace CSVs here")
    r.set_defaults(func=cmd_run)
    sub.add_parser("sweep", parents=[common], help="all variants x rates x seeds to CSV"
                   ).set_defaults(func=cmd_sweep)
    sub.add_parser("compare", parents=[common], help="original vs enhanced, paired seeds"
                   ).set_defaults(func=cmd_compare)
    o = sub.add_parser("oracle-check", parents=[common], help="simulator vs exact Markov chain")
    o.add_argument("--n", type=int, action="append", help="restrict to capacity n (repeatable)")
    o.add_argument("--slots", type=int, default=200_000, help="simulated slots per model")
    o.add_argument("--inject-r-offset", type=int, default=0, help=argparse.SUPPRESS)
    o.set_defaults(func=cmd_oracle_check)
    sub.add_parser("defaults", parents=[common], help="print every default parameter"
                   ).set_defaults(func=cmd_defaults)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (cfgio.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
