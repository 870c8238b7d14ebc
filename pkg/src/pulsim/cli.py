"""Command-line experiment runner.

    pulsim run [FILE] [--preset NAME] [--out DIR] [--trace] [--threads N] [--seed S] [--json]
    pulsim list-presets

Exit status: 0 on success, 1 on a simulation-model error (hazard,
overflow, livelock), 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import Experiment, load_file, load_text
from .errors import ConfigError, ModelError
from .presets import PRESETS
from .runner import RunOutput, RunPoint, execute

log = logging.getLogger("pulsim")

CONFIG_COLUMNS = [
    "point", "pe", "pe_count", "tasklets", "device", "channel", "kind", "strategy",
    "distance", "transfer_size", "intensity", "attribute_count", "selectivity",
    "materialization", "flush_method", "flush_threshold", "element_count", "seed",
]
METRIC_COLUMNS = [
    "exec_time_ns", "bytes_preloaded", "bytes_unloaded", "throughput_bps", "ipc",
    "pe_utilization", "total_cycles", "compute_cycles", "issue_cycles", "stall_cycles",
    "idle_cycles", "compute_instructions", "issue_instructions", "transfer_count",
    "size_register_writes", "intensity_instr_per_byte", "attained_instr_per_sec",
    "roof_instr_per_sec", "bound", "value_sum", "value_ok",
]
COLUMNS = CONFIG_COLUMNS + METRIC_COLUMNS


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".10g")
    if x is None:
        return ""
    return str(x)


def csv_row(index: int, out: RunOutput) -> list[str]:
    rep = out.report
    roof = rep.roofline()
    cfg = dict(rep.config, point=index)
    sb = rep.stall_breakdown
    metrics = {
        "exec_time_ns": rep.exec_time_ns,
        "bytes_preloaded": rep.bytes_preloaded,
        "bytes_unloaded": rep.bytes_unloaded,
        "throughput_bps": rep.throughput_bytes_per_sec,
        "ipc": rep.ipc,
        "pe_utilization": rep.pe_utilization,
        "total_cycles": sb["total"],
        "compute_cycles": sb["compute"],
        "issue_cycles": sb["issue"],
        "stall_cycles": sb["stall"],
        "idle_cycles": sb["idle"],
        "compute_instructions": rep.compute_instructions,
        "issue_instructions": rep.issue_instructions,
        "transfer_count": rep.transfer_count,
        "size_register_writes": rep.register_writes,
        "intensity_instr_per_byte": roof.intensity_instr_per_byte,
        "attained_instr_per_sec": roof.attained_instr_per_sec,
        "roof_instr_per_sec": roof.roof_instr_per_sec,
        "bound": roof.bound,
        "value_sum": rep.value_sum if out.value_ok is not None else None,
        "value_ok": out.value_ok,
    }
    return [_fmt(cfg[c]) for c in CONFIG_COLUMNS] + [_fmt(metrics[c]) for c in METRIC_COLUMNS]


def run_points(points: list[RunPoint], threads: int = 1) -> list[RunOutput]:
    """Execute every point; results come back in point order regardless of threads."""
    if threads > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(execute, points))
    return [execute(p) for p in points]


def write_outputs(exp: Experiment, outputs: list[RunOutput], out_dir: Path,
                  want_json: bool, want_trace: bool) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{exp.name}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for i, out in enumerate(outputs):
            w.writerow(csv_row(i, out))
    if want_json:
        records = []
        for i, out in enumerate(outputs):
            rep = out.report
            records.append({
                "point": i,
                "config": rep.config,
                "exec_time_ns": rep.exec_time_ns,
                "bytes_preloaded": rep.bytes_preloaded,
                "bytes_unloaded": rep.bytes_unloaded,
                "throughput_bps": rep.throughput_bytes_per_sec,
                "ipc": rep.ipc,
                "pe_utilization": rep.pe_utilization,
                "stall_breakdown": rep.stall_breakdown,
                "per_pe": rep.per_pe,
                "value_ok": out.value_ok,
            })
        (out_dir / f"{exp.name}.json").write_text(json.dumps(records, indent=1, sort_keys=True) + "\n")
    if want_trace:
        tdir = out_dir / f"{exp.name}_trace"
        tdir.mkdir(exist_ok=True)
        for i, out in enumerate(outputs):
            (tdir / f"point{i:04d}.csv").write_text("".join(line + "\n" for line in out.trace))
    return csv_path


def cmd_run(args) -> int:
    if args.preset and args.file:
        raise ConfigError("give either a config file or --preset, not both")
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; see list-presets")
        exp = load_text(PRESETS[args.preset].text, args.preset, args.seed)
    elif args.file:
        exp = load_file(args.file, args.seed)
    else:
        raise ConfigError("nothing to run: pass a config file or --preset")
    points = exp.points
    if args.trace:
        points = [p.with_(record_trace=True) for p in points]
    log.info("running %d point(s) of %s", len(points), exp.name)
    outputs = run_points(points, max(1, args.threads))
    out_dir = Path(args.out or os.environ.get("PULSIM_OUT") or "results")
    path = write_outputs(exp, outputs, out_dir, args.json or exp.json, args.trace)
    print(f"{len(outputs)} run(s) -> {path}")
    return 0


def cmd_list(_args) -> int:
    for p in PRESETS.values():
        print(f"{p.name:20s} {p.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pulsim", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a config file or a preset sweep")
    run.add_argument("file", nargs="?", help="YAML run configuration")
    run.add_argument("--preset", help="run a built-in experiment preset")
    run.add_argument("--out", help="output directory (default: $PULSIM_OUT or ./results)")
    run.add_argument("--trace", action="store_true", help="dump per-run event traces")
    run.add_argument("--threads", type=int, default=1, help="parallel worker processes")
    run.add_argument("--seed", type=int, help="override the configured seed")
    run.add_argument("--json", action="store_true", help="also write full per-run JSON reports")
    run.set_defaults(func=cmd_run)
    lp = sub.add_parser("list-presets", help="list built-in experiment presets")
    lp.set_defaults(func=cmd_list)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ModelError as e:
        print(f"model error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
