"""Command-line surface.

Subcommands wrap the library into reproducible runs: every command is
deterministic under a fixed --seed, and every command records a manifest
(resolved configuration, tool version, input digests) next to its outputs.

Exit codes: 0 success, 2 usage or validation problem, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiments
from .hurst import WindowPolicy, estimate_hurst
from .noise import (
    generate_fgn,
    generate_stable,
    read_series_binary,
    read_series_csv,
    write_series_binary,
    write_series_csv,
)
from .sde import Dynamics, SimConfig, first_passage_mc
from .sgn import save_trace

EXPERIMENT_NAMES = (
    "calibrate",
    "levy-null",
    "drift-distance",
    "convergence",
    "density-check",
    "sgn-demo",
)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(target, command: str, config: dict, inputs=(), outputs=()):
    """Manifest beside the outputs: at <dir>/manifest.json for directory
    targets, <file>.manifest.json otherwise."""
    target = Path(target)
    path = target / "manifest.json" if target.is_dir() else Path(str(target) + ".manifest.json")
    doc = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=str)
    return path


def _load_series_values(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == b"FNS1":
        return read_series_binary(path)["values"]
    return read_series_csv(path)


def cmd_gen_noise(args) -> dict:
    if args.hurst is not None:
        series = generate_fgn(args.hurst, args.length, step_dt=args.step_dt, seed=args.seed)
        kind = args.kind
    else:
        if args.kind == "fbm":
            raise ValueError("--kind fbm applies to --hurst series only")
        series = generate_stable(args.alpha, args.length, seed=args.seed)
        kind = "stable"
    out = Path(args.out)
    fmt = args.format or ("csv" if out.suffix.lower() == ".csv" else "fns")
    if fmt == "csv":
        write_series_csv(out, series)
    else:
        write_series_binary(out, series, kind=kind)
    config = {
        "hurst": args.hurst,
        "alpha": args.alpha,
        "length": args.length,
        "step_dt": args.step_dt,
        "kind": kind,
        "seed": args.seed,
        "format": fmt,
        "out": str(out),
    }
    _write_manifest(out, "gen-noise", config, outputs=[out])
    return {"written": str(out), "length": args.length, "kind": kind}


def cmd_estimate_hurst(args) -> dict:
    values = _load_series_values(args.input)
    policy = WindowPolicy(min_window=args.min_window, max_window=args.max_window)
    est = estimate_hurst(values, policy)
    report = est.as_dict()
    out = Path(args.out) if args.out else Path(str(args.input) + ".hurst.json")
    with open(out, "w") as fh:
        json.dump(report, fh, indent=2)
    _write_manifest(
        out,
        "estimate-hurst",
        {
            "input": str(args.input),
            "min_window": args.min_window,
            "max_window": args.max_window,
            "out": str(out),
        },
        inputs=[args.input],
        outputs=[out],
    )
    return report


def cmd_fpt(args) -> dict:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = {
        "grid": args.grid,
        "hurst": args.hurst,
        "a": args.a,
        "sigma": args.sigma,
        "w0": args.w0,
        "boundary": args.boundary,
        "paths": args.paths,
        "dt": args.dt,
        "t_end": args.t_end,
        "seed": args.seed,
        "out_dir": str(out_dir),
    }
    outputs = []
    if args.grid == "fig8":
        cells = experiments.fig8_grid(
            n_paths=args.paths, dt=args.dt, t_end=args.t_end, boundary=args.boundary, seed=args.seed
        )
        csv_path = out_dir / "fpt_grid.csv"
        with open(csv_path, "w") as fh:
            fh.write("hurst,a,inv_sigma2,mean_fpt_uncensored,n_censored,n_paths\n")
            for c in cells:
                fh.write(
                    f"{c['hurst']},{c['a']},{c['inv_sigma2']},"
                    f"{c['mean_fpt_uncensored']!r},{c['n_censored']},{c['n_paths']}\n"
                )
        summary = {"cells": cells}
        outputs.append(csv_path)
    else:
        cfg = SimConfig(
            params=Dynamics(a=args.a, sigma=args.sigma, hurst=args.hurst, w0=args.w0),
            t_end=args.t_end,
            dt=args.dt,
            n_paths=args.paths,
            master_seed=args.seed,
        )
        batch = first_passage_mc(cfg, args.boundary)
        csv_path = out_dir / "fpt_times.csv"
        batch.write_csv(csv_path)
        summary = batch.summary()
        outputs.append(csv_path)
    json_path = out_dir / "fpt_summary.json"
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2)
    outputs.append(json_path)
    _write_manifest(out_dir, "fpt", config, outputs=outputs)
    return summary


def cmd_experiments(args) -> dict:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
    else:
        overrides = {}
    name = args.name
    outputs = []
    if name == "calibrate":
        grid = overrides.get("h_grid", [round(h, 2) for h in np.arange(0.1, 0.95, 0.1)])
        rows = experiments.calibrate(grid, overrides.get("n_points", 10_000), args.reps, args.seed)
        summary = {"rows": rows}
        path = out_dir / "calibrate.csv"
        with open(path, "w") as fh:
            fh.write("true_hurst,mean_estimate,std_estimate\n")
            for r in rows:
                fh.write(f"{r['true_hurst']},{r['mean_estimate']!r},{r['std_estimate']!r}\n")
        outputs.append(path)
    elif name == "levy-null":
        grid = overrides.get("alpha_grid", [0.6, 1.0, 1.4, 1.8])
        rows = experiments.levy_null(grid, overrides.get("n_points", 10_000), args.reps, args.seed)
        summary = {"rows": rows}
        path = out_dir / "levy_null.csv"
        with open(path, "w") as fh:
            fh.write("alpha,mean_estimate,std_estimate\n")
            for r in rows:
                fh.write(f"{r['alpha']},{r['mean_estimate']!r},{r['std_estimate']!r}\n")
        outputs.append(path)
    elif name == "drift-distance":
        rows = experiments.drift_distance(
            hurst_values=overrides.get("hurst_values", (0.3, 0.5, 0.7)),
            dim=args.dim,
            sigma=overrides.get("sigma", 0.01),
            t_end=args.t_end,
            dt=args.dt,
            seed=args.seed,
            increment_scale=args.increment_scale,
        )
        summary = {"rows": rows[-len(set(r["hurst"] for r in rows)) :]}
        path = out_dir / "drift_distance.csv"
        with open(path, "w") as fh:
            fh.write("hurst,t,distance\n")
            for r in rows:
                fh.write(f"{r['hurst']},{r['t']!r},{r['distance']!r}\n")
        outputs.append(path)
    elif name == "convergence":
        results = experiments.convergence(
            hurst_values=overrides.get("hurst_values", (0.75,)),
            dt_exponents=overrides.get("dt_exponents", range(6, 13)),
            n_paths=args.paths,
            seed=args.seed,
        )
        summary = {"results": results}
        path = out_dir / "convergence.json"
        with open(path, "w") as fh:
            json.dump(results, fh, indent=2)
        outputs.append(path)
    elif name == "density-check":
        summary = experiments.density_check(
            hurst=overrides.get("hurst", 0.7),
            a=overrides.get("a", 1.0),
            sigma=overrides.get("sigma", 0.5),
            t=overrides.get("t", 2.0),
            n_paths=args.paths,
            dt=args.dt,
            seed=args.seed,
        )
        path = out_dir / "density_check.json"
        with open(path, "w") as fh:
            json.dump(summary, fh, indent=2)
        outputs.append(path)
    elif name == "sgn-demo":
        summary, trace = experiments.sgn_demo(
            batch=args.batch, lr=args.lr, steps=args.steps, seed=args.seed
        )
        trace_path = out_dir / "sgn_trace.bin"
        save_trace(trace, trace_path)
        report_path = out_dir / "sgn_report.json"
        with open(report_path, "w") as fh:
            json.dump(summary, fh, indent=2)
        outputs += [trace_path, Path(str(trace_path) + ".json"), report_path]
    else:  # argparse choices should prevent this
        raise ValueError(f"unknown experiment {name!r}; available: {', '.join(EXPERIMENT_NAMES)}")
    config = {"name": name, "seed": args.seed, "overrides": overrides}
    config.update(
        {
            k: getattr(args, k)
            for k in ("reps", "paths", "dt", "t_end", "dim", "batch", "lr", "steps")
            if hasattr(args, k)
        }
    )
    _write_manifest(out_dir, f"experiments {name}", config, outputs=outputs)
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbmlab",
        description="Fractional noise lab: generation, Hurst estimation, "
        "fractional OU analytics, and SDE Monte Carlo.",
    )
    parser.add_argument("--version", action="version", version=f"fbmlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-noise", help="write an FGN/FBM or stable series to disk")
    kind = g.add_mutually_exclusive_group(required=True)
    kind.add_argument("--hurst", type=float, help="Hurst index in (0, 1) for FGN")
    kind.add_argument("--alpha", type=float, help="stable index in (0, 2]")
    g.add_argument("--len", dest="length", type=int, required=True, help="series length")
    g.add_argument("--step-dt", type=float, default=1.0, help="time step per increment")
    g.add_argument("--kind", choices=("fgn", "fbm"), default="fgn", help="emit increments or path")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output file (.fns binary or .csv)")
    g.add_argument("--format", choices=("fns", "csv"), help="override format sniffed from suffix")
    g.set_defaults(func=cmd_gen_noise)

    e = sub.add_parser("estimate-hurst", help="R/S Hurst estimate of a stored series")
    e.add_argument("input", help="FNS1 or index,value CSV file")
    e.add_argument("--min-window", type=int, default=WindowPolicy.min_window)
    e.add_argument("--max-window", type=int, default=None)
    e.add_argument("--out", help="report path (default: <input>.hurst.json)")
    e.set_defaults(func=cmd_estimate_hurst)

    f = sub.add_parser("fpt", help="first-passage Monte Carlo (single cell or fig8 grid)")
    f.add_argument("--grid", choices=("fig8",), help="run the full 3x5x5 escaping-time grid")
    f.add_argument("--hurst", type=float, default=0.7)
    f.add_argument("--a", type=float, default=1.0)
    f.add_argument("--sigma", type=float, default=1.0)
    f.add_argument("--w0", type=float, default=0.0)
    f.add_argument("--boundary", type=float, default=1.0)
    f.add_argument("--paths", type=int, default=50)
    f.add_argument("--dt", type=float, default=0.01)
    f.add_argument("--t-end", type=float, default=1000.0)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out-dir", default="fbmlab-out")
    f.set_defaults(func=cmd_fpt)

    x = sub.add_parser("experiments", help="bundled experiment recipes")
    x.add_argument("name", choices=EXPERIMENT_NAMES)
    x.add_argument("--config", help="JSON file with recipe-specific overrides")
    x.add_argument("--reps", type=int, default=100)
    x.add_argument("--paths", type=int, default=10_000)
    x.add_argument("--dt", type=float, default=1e-3)
    x.add_argument("--t-end", type=float, default=20.0)
    x.add_argument("--dim", type=int, default=10_000)
    x.add_argument("--batch", type=int, default=32)
    x.add_argument("--lr", type=float, default=0.01)
    x.add_argument("--steps", type=int, default=5000)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--out-dir", default="fbmlab-out")
    x.set_defaults(func=cmd_experiments)

    for p in (g, e, f, x):
        p.add_argument("--emit", choices=("json",), help="print the summary to stdout")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        summary = args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 1 by contract
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "emit", None) == "json":
        json.dump(summary, sys.stdout, indent=2, default=str)
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
