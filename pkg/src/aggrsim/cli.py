"""Command line front end: ``aggrsim <subcommand> --config FILE``.

Subcommands cover the five experiment families plus stability analysis:
particles1, particles2, pde1d, pde2d, kinetic1d, stability.  Each reads
a `key = value` config file, runs deterministically (identical config
and seed give byte-identical artifacts), writes CSV/PGM snapshots into
the output directory, and prints a one-line summary.  Exit codes: 0 on
success, 1 on configuration errors, 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .analysis import count_above_mean_regions, count_blobs
from .configio import (
    SUBCOMMANDS,
    RunConfig,
    build_kinetic,
    build_particles,
    build_pde,
    build_stability,
    parse_config,
)
from .errors import ConfigError, NumericalError
from .kinetic import moments, run_kinetic
from .meanfield import run_pde
from .particles import run_particles
from .snapshots import SnapshotRecord, fmt, write_snapshot
from .stability import classify_modes

_HELP = {
    "particles1": "first-order particle model (positions only)",
    "particles2": "second-order particle model (positions and velocities)",
    "pde1d": "mean-field density evolution on a 1D torus",
    "pde2d": "mean-field density evolution on a 2D torus",
    "kinetic1d": "kinetic phase-space evolution on a 1D torus",
    "stability": "linear stability report for a uniform state",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggrsim",
        description="Simulation suite for aggregation driven by density-dependent random motion.",
    )
    parser.add_argument(
        "--version", action="version", version=f"aggrsim {__version__}"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", required=True, help="path to a 'key = value' config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--out",
            default=None,
            help="output directory (default: the config 'out' key, else ./out)",
        )
    return parser


def _run_particles(rc: RunConfig, seed: int | None, out: str, formats) -> str:
    cfg = build_particles(rc, seed=seed)
    run = run_particles(cfg)
    for snap in run.snapshots:
        payload = {"positions": snap.positions, "theta": snap.theta}
        if snap.velocities is not None:
            payload["velocities"] = snap.velocities
        record = SnapshotRecord(
            time=snap.time,
            kind="particles",
            label=f"particles_{snap.step:06d}",
            payload=payload,
        )
        write_snapshot(record, out, formats)
    final = run.final
    return (
        f"{rc.subcommand}: n={cfg.n_particles} t_final={fmt(final.time)} "
        f"clusters={final.n_clusters}"
    )


def _run_pde(rc: RunConfig, seed: int | None, out: str, formats) -> str:
    cfg, initial = build_pde(rc, seed=seed)
    run = run_pde(initial, cfg)
    dimension = initial.geometry.dimension
    for i, fld in enumerate(run.snapshots):
        if dimension == 1:
            x = np.arange(fld.values.shape[0]) * fld.dx
            record = SnapshotRecord(
                time=fld.time,
                kind="field1d",
                label=f"rho_{i:04d}",
                payload={"x": x, "rho": fld.values},
            )
        else:
            record = SnapshotRecord(
                time=fld.time,
                kind="field2d",
                label=f"rho_{i:04d}",
                payload={"values": fld.values},
            )
        write_snapshot(record, out, formats)
    final = run.final
    if dimension == 1:
        aggregates = count_above_mean_regions(final.values)
    else:
        aggregates = count_blobs(final.values)
    steady = fmt(run.steady_time) if run.steady_time is not None else "not reached"
    return (
        f"{rc.subcommand}: mass={fmt(final.mass)} aggregates={aggregates} "
        f"steady_time={steady}"
    )


def _run_kinetic(rc: RunConfig, seed: int | None, out: str, formats) -> str:
    cfg, initial = build_kinetic(rc, seed=seed)
    run = run_kinetic(initial, cfg)
    for i, f in enumerate(run.snapshots):
        rho = moments(f)[0]
        write_snapshot(
            SnapshotRecord(
                time=f.time,
                kind="field1d",
                label=f"rho_{i:04d}",
                payload={"x": cfg.x_nodes, "rho": rho},
            ),
            out,
            formats,
        )
        if "pgm" in formats:
            write_snapshot(
                SnapshotRecord(
                    time=f.time,
                    kind="phase",
                    label=f"f_{i:04d}",
                    payload={"values": f.values},
                ),
                out,
                formats,
            )
    traces = run.traces
    write_snapshot(
        SnapshotRecord(
            time=traces[-1].time,
            kind="moments",
            label="moments",
            payload={
                "times": [t.time for t in traces],
                "masses": [t.mass for t in traces],
                "momenta": [t.momentum for t in traces],
                "energies": [t.energy for t in traces],
            },
        ),
        out,
        formats,
    )
    rho_final = moments(run.final)[0]
    return (
        f"kinetic1d: mass={fmt(run.masses[-1])} "
        f"aggregates={count_above_mean_regions(rho_final)} "
        f"upwind_faces={run.upwind_faces_total} "
        f"max_tv_increase={fmt(run.max_tv_increase)}"
    )


def _run_stability(rc: RunConfig, seed: int | None, out: str, formats) -> str:
    inputs = build_stability(rc)
    reports = {}
    for norm in ("raw", "unit"):
        spec = replace(inputs["spec"], normalization=norm)
        report = classify_modes(
            inputs["rho0"], spec, inputs["responses"], inputs["geom"], inputs["max_mode"]
        )
        write_snapshot(
            SnapshotRecord(
                time=0.0,
                kind="stability",
                label=f"stability_{norm}",
                payload={"report": report},
            ),
            out,
            formats,
        )
        reports[norm] = report
    parts = [f"stability: rho0={fmt(inputs['rho0'])}"]
    for norm in ("raw", "unit"):
        report = reports[norm]
        parts.append(
            f"{norm}: {len(report.unstable_modes)} unstable modes "
            f"(threshold={fmt(report.threshold)})"
        )
    return " | ".join(parts)


_RUNNERS = {
    "particles1": _run_particles,
    "particles2": _run_particles,
    "pde1d": _run_pde,
    "pde2d": _run_pde,
    "kinetic1d": _run_kinetic,
    "stability": _run_stability,
}


def _dispatch(args: argparse.Namespace) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    rc = parse_config(text, args.subcommand)
    out = args.out if args.out is not None else rc.values["out"]
    formats = rc.values["formats"]
    os.makedirs(out, exist_ok=True)
    summary = _RUNNERS[rc.subcommand](rc, args.seed, out, formats)
    print(summary)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"aggrsim: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"aggrsim: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
