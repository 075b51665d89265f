"""``dral`` command-line interface.

Exit codes: 0 success, 1 check failure, 2 usage/config/input error,
3 runtime (numerical) error.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
import sys
import time
from pathlib import Path

from .acquisition import StrategyKind
from .checks import check_results_dir
from .config import config_hash, load_config
from .errors import ConfigError, DatasetError
from .harness import SUMMARY_COLUMNS, TrialError, run_trials, write_results
from .plotting import plot_learning_curves

log = logging.getLogger("dral")

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

SWEEP_COLUMNS = ("cell", "strategy", "eta", "kernel") + SUMMARY_COLUMNS


def _unique_dir(root: Path, name: str) -> Path:
    path = root / name
    k = 1
    while path.exists():
        path = root / f"{name}-{k}"
        k += 1
    path.mkdir(parents=True)
    return path


def _run_id(cfg) -> str:
    return f"{time.strftime('%Y%m%d-%H%M%S', time.gmtime())}-{config_hash(cfg)}"


def _jobs(args) -> int:
    return args.jobs if args.jobs else (os.cpu_count() or 1)


def execute(cfg, out_dir, jobs=1) -> Path:
    """Run all trials of ``cfg`` and write the result files into ``out_dir``."""
    records = run_trials(cfg, jobs=jobs)
    return write_results(out_dir, cfg, records, extra={"run_id": Path(out_dir).name})


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.set)
    out = Path(args.out_dir) if args.out_dir else _unique_dir(Path(args.out), _run_id(cfg))
    execute(cfg, out, _jobs(args))
    print(out)
    return EXIT_OK


def _kernel_value(base: dict, value) -> dict:
    k = dict(base)
    if isinstance(value, dict):
        k.update(value)
    else:
        k["kind"] = str(value)
    return k


def _kernel_label(k) -> str:
    return k.kind.value if k.kind.value != "matern" else f"matern{k.nu:g}"


def sweep_cells(cfg, axes):
    """Cross product of the configured sweep values along ``axes``."""
    for axis in axes:
        if axis not in cfg.sweep:
            raise ConfigError(f"sweep.{axis}", "axis requested but no values listed in the config")
    base_kernel = cfg.kernel.to_dict()
    for combo in itertools.product(*(cfg.sweep[a] for a in axes)):
        changes = {}
        for axis, value in zip(axes, combo):
            if axis == "kernel":
                changes["kernel"] = _kernel_value(base_kernel, value)
            elif axis == "strategy":
                changes["strategy.kind"] = value
            else:
                changes["ambiguity.eta"] = value
        yield cfg.replace(**changes)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.set)
    axes = list(dict.fromkeys(args.axis))
    cells = list(sweep_cells(cfg, axes))
    root = Path(args.out_dir) if args.out_dir else _unique_dir(Path(args.out), f"sweep-{_run_id(cfg)}")
    root.mkdir(parents=True, exist_ok=True)
    rows, failures = [], 0
    for k, cell in enumerate(cells):
        name = f"cell{k:03d}_{cell.strategy.value}_eta{cell.eta:g}_{_kernel_label(cell.kernel)}"
        try:
            execute(cell, root / name, _jobs(args))
        except TrialError as exc:
            failures += 1
            print(f"error: {name}: {exc}", file=sys.stderr)
            if not args.keep_going:
                return EXIT_RUNTIME
            continue
        with open(root / name / "summary.csv", newline="") as fh:
            for r in csv.DictReader(fh):
                rows.append([name, cell.strategy.value, repr(cell.eta), _kernel_label(cell.kernel)] +
                            [r[c] for c in SUMMARY_COLUMNS])
    with open(root / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        w.writerows(rows)
    print(root)
    return EXIT_RUNTIME if failures else EXIT_OK


def _series(rows, metric):
    mean_key, se_key = ("mean_E", "stderr_E") if metric == "E" else ("mean_worst_var", "stderr_worst_var")
    return {
        "t": [int(float(r["t"])) for r in rows],
        "mean": [float(r[mean_key]) for r in rows],
        "stderr": [float(r[se_key]) for r in rows],
    }


def _read_rows(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no rows")
    return rows


def render_plots(results_dir) -> list:
    """Write one SVG per metric (and per eta/kernel panel for sweeps). Returns the paths."""
    results_dir = Path(results_dir)
    written = []
    if (results_dir / "sweep.csv").is_file():
        rows = _read_rows(results_dir / "sweep.csv")
        panels = {}
        for r in rows:
            panels.setdefault((r["eta"], r["kernel"]), {}).setdefault(r["strategy"], []).append(r)
        for (eta, kern), by_strategy in panels.items():
            for metric in ("E", "worst_var"):
                series = {StrategyKind.parse(s).label: _series(rs, metric) for s, rs in by_strategy.items()}
                path = results_dir / f"fig_{metric}_eta{float(eta):g}_{kern}.svg"
                written.append(plot_learning_curves(series, metric, path, f"{kern}, eta = {float(eta):g}"))
        return written
    if not (results_dir / "summary.csv").is_file():
        raise FileNotFoundError(f"{results_dir}: neither summary.csv nor sweep.csv found")
    rows = _read_rows(results_dir / "summary.csv")
    label = "run"
    run_json = results_dir / "run.json"
    if run_json.is_file():
        with open(run_json) as fh:
            label = StrategyKind.parse(json.load(fh)["config"]["strategy"]["kind"]).label
    for metric in ("E", "worst_var"):
        path = results_dir / f"fig_{metric}.svg"
        written.append(plot_learning_curves({label: _series(rows, metric)}, metric, path))
    return written


def cmd_plot(args) -> int:
    for path in render_plots(args.results_dir):
        print(path)
    return EXIT_OK


def cmd_check(args) -> int:
    target = Path(args.path)
    if target.is_file():
        cfg = load_config(target, args.set)
        out = Path(args.out_dir) if args.out_dir else _unique_dir(Path(args.out), f"check-{_run_id(cfg)}")
        execute(cfg, out, _jobs(args))
        run_dirs = [out]
    elif (target / "run.json").is_file():
        run_dirs = [target]
    elif target.is_dir():
        run_dirs = sorted(p.parent for p in target.glob("*/run.json"))
        if not run_dirs:
            raise FileNotFoundError(f"{target}: no run directories found")
    else:
        raise FileNotFoundError(f"{target}: no such file or directory")
    failed = False
    for rd in run_dirs:
        print(f"== {rd}")
        for res in check_results_dir(rd, coverage_trials=args.coverage_trials):
            print(res.line())
            failed |= res.failed
    print("FAIL" if failed else "ALL CHECKS PASSED")
    return EXIT_CHECK if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dral", description="Distributionally robust active learning for GP regression.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config field")
        p.add_argument("--out", default="results", help="results root (default: results)")
        p.add_argument("--out-dir", help="exact output directory instead of results/<run-id>")
        p.add_argument("--jobs", type=int, default=0, help="parallel trials (default: all cores)")

    p = sub.add_parser("run", help="run the trials of one config")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the cross product of sweep axes")
    p.add_argument("config")
    p.add_argument("--axis", action="append", required=True, choices=("eta", "strategy", "kernel"))
    p.add_argument("--keep-going", action="store_true")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render learning-curve figures for a results directory")
    p.add_argument("results_dir")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("check", help="replay the bound checks on results (or on a fresh run of a config)")
    p.add_argument("path")
    p.add_argument("--coverage-trials", type=int, default=50)
    common(p)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrialError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (DatasetError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
