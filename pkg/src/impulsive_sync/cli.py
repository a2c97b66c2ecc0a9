"""Command-line experiment runner.

    impulsive-sync run SPEC.json [--out-dir DIR] [--quiet]
    impulsive-sync design SPEC.json
    impulsive-sync --demo lc            (same as: run --demo lc)

Exit codes: 0 ok, 2 malformed spec, 3 controllability failure,
4 spanning-tree failure, 5 internal numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import matlib as ml
from .config import RunSpec, SCHEMA_VERSION, lc_demo_document, load_document, parse_spec
from .deadbeat import DeadbeatDesign, design_deadbeat
from .errors import (ControllabilityError, ConvergenceError, NotNilpotentError, NumericalError,
                     SingularMatrixError, SpanningTreeError, SpecError)
from .graph import LaplacianSpectrum, analyze_spectrum, laplacian
from .sync import AnalysisReport, NetworkRun, Trajectory, analyze, mu_bound, simulate

log = logging.getLogger("impulsive_sync")

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_CONTROLLABILITY = 3
EXIT_SPANNING_TREE = 4
EXIT_NUMERICAL = 5

DEMOS = {"lc": lc_demo_document}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, SpecError):
        return EXIT_SPEC
    if isinstance(exc, ControllabilityError):
        return EXIT_CONTROLLABILITY
    if isinstance(exc, SpanningTreeError):
        return EXIT_SPANNING_TREE
    if isinstance(exc, (NumericalError, ConvergenceError, SingularMatrixError, NotNilpotentError,
                        ArithmeticError, ValueError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    raise exc


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if np.all(obj.imag == 0):
                return obj.real.tolist()
            return [_jsonable(v) for v in obj]
        return obj.tolist()
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    return obj


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_design(spec: RunSpec) -> DeadbeatDesign:
    if not spec.system.is_controllable():
        raise ControllabilityError("period T loses controllability: (A, B) itself is not controllable")
    return design_deadbeat(spec.system)


def design_summary(design: DeadbeatDesign) -> dict:
    return {
        "n": design.n,
        "K": design.K.ravel(),
        "G": design.G.ravel(),
        "KB": design.kb,
        "C": design.C,
        "M": design.M,
        "M_power_norms": design.power_norms(),
        "norm_N": design.norm_N,
        "norm_BKeAT": ml.two_norm(design.BKeAT),
    }


def spectrum_summary(spec: LaplacianSpectrum) -> dict:
    return {
        "laplacian": spec.gamma,
        "eigenvalues": [[float(v.real), float(v.imag)] for v in spec.eigenvalues],
        "lambda2": spec.lambda2,
        "ell": None if spec.ell is None else spec.ell.ravel(),
        "spanning_tree": spec.spanning_tree,
    }


def analysis_summary(rep: AnalysisReport) -> dict:
    return {
        "mu": rep.mu,
        "mu_bound": rep.mu_bound,
        "norm_BKeAT": rep.norm_BKeAT,
        "norm_N": rep.norm_N,
        "norm_M": rep.norm_M,
        "lambda2": rep.lambda2,
        "block_radii": rep.block_radii,
        "Phi_radius": rep.phi_radius,
        "synchronous": rep.synchronous,
    }


def trajectory_csv(traj: Trajectory) -> str:
    """Long-format CSV: one row per (sample, agent)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "t", "plus_minus", "agent"] + [f"x{c + 1}" for c in range(traj.n)] + ["disagreement"])
    for row, (t, tag, k) in enumerate(zip(traj.times, traj.tags, traj.periods_index)):
        x = traj.states[row]
        dis = _fmt(traj.sample_disagreement[row])
        for i in range(traj.q):
            w.writerow([int(k), _fmt(t), tag, i + 1] + [_fmt(v) for v in x[i * traj.n:(i + 1) * traj.n]] + [dis])
    return buf.getvalue()


def execute(spec: RunSpec) -> tuple[dict, Trajectory]:
    """Design, analyze and simulate one run; returns (report, trajectory)."""
    design = build_design(spec)
    spectra = [analyze_spectrum(laplacian(g)) for g in spec.graphs]
    for idx, s in enumerate(spectra):
        if not s.spanning_tree:
            where = f"graph_sequence[{idx}]" if spec.time_varying else "graph"
            raise SpanningTreeError(f"{where} has no spanning tree")
    run = NetworkRun(
        sys=spec.system,
        design=design,
        graph=tuple(spectra) if spec.time_varying else spectra[0],
        mu=spec.mu,
        x0=spec.initial_state(),
        periods=spec.periods,
        samples_per_period=spec.samples_per_period,
    )
    analysis = analyze(run)
    traj = simulate(run)
    report = {
        "version": SCHEMA_VERSION,
        "mu_policy": {"mode": spec.mu.mode, "value": spec.mu.value, "safety": spec.mu.safety},
        "design": design_summary(design),
        "time_varying": spec.time_varying,
    }
    if spec.time_varying:
        report["graphs"] = [spectrum_summary(s) for s in spectra]
        report["analyses"] = [analysis_summary(a) for a in analysis]
    else:
        report["graph"] = spectrum_summary(spectra[0])
        report["analysis"] = analysis_summary(analysis)
    report["simulation"] = {
        "periods": spec.periods,
        "samples_per_period": spec.samples_per_period,
        "x0": run.x0,
        "disagreement": traj.disagreement,
        "consensus": traj.consensus,
    }
    return _jsonable(report), traj


def _resolve(path: str | None, default: str, out_dir: Path) -> Path:
    p = Path(path) if path else Path(default)
    return p if p.is_absolute() else out_dir / p


def run_one(doc, out_dir: Path, quiet: bool, default_stem: str = "") -> int:
    try:
        spec = parse_spec(doc)
        report, traj = execute(spec)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        code = exit_code_for(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    report_path = _resolve(spec.report_path, f"{default_stem}report.json", out_dir)
    traj_path = _resolve(spec.trajectory_path, f"{default_stem}trajectory.csv", out_dir)
    _atomic_write(report_path, json.dumps(report, indent=2) + "\n")
    _atomic_write(traj_path, trajectory_csv(traj))
    if not quiet:
        K = report["design"]["K"]
        print(f"K = {K}")
        if spec.time_varying:
            print(f"time-varying topology: {len(spec.graphs)} graphs, infinite coupling")
        else:
            a = report["analysis"]
            print(f"mu bound = {a['mu_bound']:.6g}, mu = {a['mu']}, Phi radius = {a['Phi_radius']:.6g}, "
                  f"synchronous = {a['synchronous']}")
        print(f"final disagreement = {traj.disagreement[-1]:.3e}")
        print(f"wrote {report_path} and {traj_path}")
    return EXIT_OK


def cmd_run(doc, out_dir: Path, quiet: bool) -> int:
    if isinstance(doc, dict) and "runs" in doc:
        if doc.get("version") != SCHEMA_VERSION:
            print(f"error: version: expected {SCHEMA_VERSION!r}", file=sys.stderr)
            return EXIT_SPEC
        runs = doc["runs"]
        if not isinstance(runs, list) or not runs:
            print("error: runs: expected a non-empty list", file=sys.stderr)
            return EXIT_SPEC
        with ThreadPoolExecutor() as pool:
            codes = list(pool.map(lambda ir: run_one(ir[1], out_dir, quiet, f"run{ir[0]}_"), enumerate(runs)))
        return next((c for c in codes if c != EXIT_OK), EXIT_OK)
    return run_one(doc, out_dir, quiet)


def cmd_design(doc) -> int:
    try:
        spec = parse_spec(doc, require_graph=False)
        design = build_design(spec)
        bound = None
        if spec.graphs:
            spectra = [analyze_spectrum(laplacian(g)) for g in spec.graphs]
            for s in spectra:
                if not s.spanning_tree:
                    raise SpanningTreeError("graph has no spanning tree")
            bound = [mu_bound(design, s.lambda2) for s in spectra]
    except Exception as exc:  # noqa: BLE001
        code = exit_code_for(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    np.set_printoptions(precision=10, suppress=True)
    print(f"K = {design.K.ravel()}")
    print(f"G = {design.G.ravel()}")
    print(f"KB = {design.kb:.12g}")
    for k, v in enumerate(design.power_norms(), start=1):
        print(f"||M^{k}|| = {v:.6e}")
    print(f"||N|| = {design.norm_N:.12g}")
    if bound is not None:
        for b in bound:
            print(f"mu bound = {b:.12g}")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--demo", choices=sorted(DEMOS), default=argparse.SUPPRESS,
                        help="use a built-in spec instead of a file")
    common.add_argument("--out-dir", type=Path, default=argparse.SUPPRESS,
                        help="directory for relative output paths (default: current directory)")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="impulsive-sync", parents=[common],
                                description="Impulsive deadbeat coupling: design, analysis, simulation.")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", parents=[common], help="design, analyze and simulate a spec")
    r.add_argument("spec", nargs="?", help="path to a v1 JSON spec")
    d = sub.add_parser("design", parents=[common], help="print the deadbeat design only")
    d.add_argument("spec", nargs="?", help="path to a v1 JSON spec")
    return p


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    demo = getattr(args, "demo", None)
    out_dir = getattr(args, "out_dir", None) or Path.cwd()
    quiet = getattr(args, "quiet", False)
    spec_path = getattr(args, "spec", None)
    command = args.command or ("run" if demo else None)
    if command is None:
        parser.print_help(sys.stderr)
        return EXIT_SPEC
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO, format="%(message)s")

    if demo and spec_path:
        print("error: give either a spec path or --demo, not both", file=sys.stderr)
        return EXIT_SPEC
    if demo:
        doc = DEMOS[demo]()
    elif spec_path:
        try:
            doc = load_document(spec_path)
        except SpecError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_SPEC
    else:
        print("error: a spec path or --demo is required", file=sys.stderr)
        return EXIT_SPEC

    if command == "design":
        return cmd_design(doc)
    return cmd_run(doc, Path(out_dir), quiet)


if __name__ == "__main__":
    sys.exit(main())
