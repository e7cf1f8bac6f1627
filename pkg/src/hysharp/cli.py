"""Command-line entry point: ``hysharp run --suite NAME [options]``.

Options may also come from an INI file given with ``--config``; flags on the
command line override the file.  ``report.json`` is byte-deterministic for a
fixed configuration; run metadata (time, host, versions) goes to ``meta.json``.
Exit status is 0 when every report passes, 1 when any fails and 2 on a usage
error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from hysharp import __version__, kernels
from hysharp.suites import SUITES, RunConfig, run_suite

_FLOAT_LISTS = ("p", "eta", "eps")
_SCALARS = {"rho": float, "delta": float, "seed": int, "tol": float, "samples": int, "jobs": int, "out": str}


def _floats(text):
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def build_parser():
    parser = argparse.ArgumentParser(prog="hysharp", description="Numerical verification suites.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a verification suite")
    run.add_argument("--suite", choices=SUITES + ("all",))
    run.add_argument("--config", help="INI file with [suite], [grid] and [params] sections")
    run.add_argument("--p", help="comma-separated exponents in (1, 2)")
    run.add_argument("--d", type=int, help="dimension (1 or 2)")
    run.add_argument("--grid-l", type=float, dest="grid_L", help="grid half-width L")
    run.add_argument("--grid-n", type=int, dest="grid_N", help="points per axis (even, >= 8)")
    run.add_argument("--eta", help="comma-separated eta values")
    run.add_argument("--eps", help="comma-separated epsilon values")
    run.add_argument("--rho", type=float)
    run.add_argument("--delta", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--tol", type=float, help="override the suite tolerance")
    run.add_argument("--samples", type=int, help="pointwise sample count")
    run.add_argument("--jobs", type=int, help="worker processes (suites run in parallel)")
    run.add_argument("--out", help="output directory (default $HYSHARP_OUT or ./out)")
    return parser


def _from_file(path):
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ValueError(f"cannot read config file {path!r}")
    values = {}
    if cp.has_option("suite", "name"):
        values["suite"] = cp.get("suite", "name")
    if cp.has_section("grid"):
        g = cp["grid"]
        if "L" in g:
            values["grid_L"] = g.getfloat("L")
        if "N" in g:
            values["grid_N"] = g.getint("N")
        if "d" in g:
            values["d"] = g.getint("d")
    if cp.has_section("params"):
        for key, raw in cp["params"].items():
            if key in _FLOAT_LISTS:
                values[key] = _floats(raw)
            elif key in _SCALARS:
                values[key] = _SCALARS[key](raw)
            else:
                raise ValueError(f"unknown parameter {key!r} in config file")
    return values


def resolve_config(args):
    """Merge defaults, the config file and command-line flags into a RunConfig."""
    values = {"out": os.environ.get("HYSHARP_OUT", "out")}
    if args.config:
        values.update(_from_file(args.config))
    for key in ("suite", "d", "grid_L", "grid_N", *_SCALARS):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    for key in _FLOAT_LISTS:
        v = getattr(args, key)
        if v is not None:
            values[key] = _floats(v)
    if "suite" not in values:
        raise ValueError("no suite given (use --suite or [suite] name in the config file)")
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _config_dict(cfg):
    return {
        "suite": cfg.suite, "p": list(cfg.p), "d": cfg.d, "grid_L": cfg.grid_L, "grid_N": cfg.grid_N,
        "eta": list(cfg.eta), "eps": list(cfg.eps), "rho": cfg.rho, "delta": cfg.delta,
        "seed": cfg.seed, "tol": cfg.tol, "samples": cfg.samples, "jobs": cfg.jobs,
    }


def _run_one(args):
    name, cfg = args
    reports, tables = run_suite(name, cfg)
    return name, [r.to_dict() for r in reports], tables


def execute(cfg):
    """Run the configured suites; returns ``(report dicts, tables)`` in suite order."""
    names = list(SUITES) if cfg.suite == "all" else [cfg.suite]
    jobs = [(n, cfg) for n in names]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    reports, tables = [], {}
    for name, reps, tabs in results:
        for r in reps:
            reports.append({"suite": name, **r})
        tables.update(tabs)
    return reports, tables


def write_outputs(out, cfg, reports, tables, argv):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(reports, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    for stem, (header, rows) in sorted(tables.items()):
        with open(out / f"{stem}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows([[repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row]
                         for row in rows])
    meta = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "host": platform.node(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "hysharp": __version__,
        "backend": kernels.BACKEND,
        "argv": list(argv),
        "config": _config_dict(cfg),
    }
    with open(out / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
    except (ValueError, TypeError) as exc:
        print(f"hysharp: error: {exc}", file=sys.stderr)
        return 2
    reports, tables = execute(cfg)
    write_outputs(cfg.out, cfg, reports, tables, argv)
    failed = [r for r in reports if not r["pass"]]
    for r in reports:
        status = "PASS" if r["pass"] else "FAIL"
        print(f"{status}  {r['suite']}/{r['name']}  {json.dumps(r['params'], sort_keys=True)}")
    print(f"{len(reports) - len(failed)}/{len(reports)} passed; reports in {cfg.out}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
