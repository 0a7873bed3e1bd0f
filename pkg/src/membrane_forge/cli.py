"""Command-line front end: scenario in, CSV/VTK/JSON artifacts out."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MembraneForgeError
from .flow import gradient_flow
from .geometry import Configuration
from .scenario import Scenario, parse_scenario
from .shape_derivative import gradient
from .solve import minimize_membrane
from .validation import fd_derivative, run_validation

__all__ = ["main"]


def _write_manifest(out: Path, scenario_text: str, command: str, timings: dict) -> None:
    import scipy

    manifest = {
        "command": command,
        "scenario_sha256": hashlib.sha256(scenario_text.encode()).hexdigest(),
        "versions": {
            "membrane_forge": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "timings_seconds": timings,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _cmd_solve(sc: Scenario, out: Path) -> dict:
    from .fem.vtk import write_vtk

    spec = sc.problem()
    t0 = time.perf_counter()
    solution = minimize_membrane(spec, sc.initial_config())
    t_solve = time.perf_counter() - t0
    write_vtk(solution.field, out / "field.vtk")
    rows = [
        [i, repr(float(g[0])), repr(float(g[1])), repr(float(g[2])), repr(float(r[0])), repr(float(r[1]))]
        for i, (g, r) in enumerate(zip(np.atleast_2d(solution.gamma), np.atleast_2d(solution.residuals)))
    ]
    _write_csv(out / "summary.csv", ["particle", "gamma1", "gamma2", "gamma3", "res_value", "res_slope"], rows)
    print(f"energy = {solution.energy:.10g}")
    return {"solve": t_solve}


def _cmd_derivative(sc: Scenario, out: Path, jobs: int) -> dict:
    spec = sc.problem()
    config = sc.initial_config()
    block = sc.derivative or {}
    n = len(config)
    directions = block.get("directions") or [np.eye(1, 3 * n, k).reshape(n, 3) for k in range(3 * n)]
    delta = block.get("fd_delta", 1e-3)

    t0 = time.perf_counter()
    solution = minimize_membrane(spec, config)
    grad = gradient(spec, config, solution)
    rows = []
    for idx, e in enumerate(directions):
        formula = float(np.sum(grad.gradient * e))
        fd = fd_derivative(spec, config, e, delta)
        rel = abs(formula - fd) / max(abs(fd), 1e-14)
        rows.append([idx, repr(float(formula)), repr(float(fd)), repr(float(rel))])
    _write_csv(out / "derivative.csv", ["direction", "formula", "fd", "rel_diff"], rows)
    return {"derivative": time.perf_counter() - t0}


def _scan_sample(args):
    scenario_text, t, delta = args
    sc = parse_scenario(scenario_text)
    spec = sc.problem()
    e = sc.scan["direction"]
    config = Configuration.from_array(
        np.array(sc.poses, dtype=float).reshape(-1, 3) + t * e
    )
    solution = minimize_membrane(spec, config)
    grad = gradient(spec, config, solution)
    formula = float(np.sum(grad.gradient * e))
    fd = fd_derivative(spec, config, e, delta)
    return t, solution.energy, formula, fd


def _cmd_scan(sc: Scenario, scenario_text: str, out: Path, jobs: int) -> dict:
    if sc.scan is None:
        raise MembraneForgeError("scenario has no [scan] block")
    from .scenario import serialize_scenario

    t0 = time.perf_counter()
    ts = np.linspace(sc.scan["start"], sc.scan["stop"], sc.scan["samples"])
    # workers re-parse the (possibly grid-overridden) scenario themselves, so
    # the payload stays picklable
    work = [(serialize_scenario(sc), float(t), sc.scan["fd_delta"]) for t in ts]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_scan_sample, work))
    else:
        results = [_scan_sample(w) for w in work]
    rows = [[repr(float(t)), repr(float(J)), repr(float(f)), repr(float(fd))] for t, J, f, fd in results]
    _write_csv(out / "scan.csv", ["t", "energy", "formula_derivative", "fd_derivative"], rows)
    return {"scan": time.perf_counter() - t0}


def _cmd_flow(sc: Scenario, out: Path, tau: float | None, steps: int | None) -> dict:
    spec = sc.problem()
    block = sc.flow or {}
    t0 = time.perf_counter()
    trajectory = gradient_flow(
        spec,
        sc.initial_config(),
        tau=tau if tau is not None else block.get("tau", 0.5),
        max_steps=steps if steps is not None else block.get("max_steps", 100),
        grad_tol=block.get("grad_tol", 1e-4),
    )
    trajectory.write_csv(out / "trajectory.csv")
    print(f"flow terminated: {trajectory.reason} after {trajectory.final.step} steps, "
          f"energy {trajectory.final.energy:.8g}")
    return {"flow": time.perf_counter() - t0}


def _cmd_validate(sc: Scenario, out: Path) -> dict:
    t0 = time.perf_counter()
    report = run_validation(sc.problem(), sc.initial_config())
    rows = [[name, repr(float(value)), repr(float(tol)), "pass" if value <= tol else "FAIL"]
            for name, value, tol in report.rows]
    _write_csv(out / "validation.csv", ["check", "residual", "tolerance", "status"], rows)
    for name, value, tol in report.rows:
        status = "pass" if value <= tol else "FAIL"
        print(f"{status:4s}  {name:40s} residual {value:.3e}  tol {tol:.3e}")
    if not report.passed:
        raise MembraneForgeError("validation suite reported failures")
    return {"validate": time.perf_counter() - t0}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="membrane-forge",
        description="Minimize particle-membrane interaction energies and their gradients.",
    )
    parser.add_argument("command", choices=["solve", "derivative", "scan", "flow", "validate"])
    parser.add_argument("--scenario", required=True, help="scenario TOML file")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for scan samples")
    parser.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"), help="override grid size")
    parser.add_argument("--tau", type=float, help="override flow step size")
    parser.add_argument("--steps", type=int, help="override flow step budget")
    args = parser.parse_args(argv)

    try:
        scenario_text = Path(args.scenario).read_text()
        sc = parse_scenario(scenario_text)
        if args.grid:
            from dataclasses import replace

            sc = replace(sc, nx=args.grid[0], ny=args.grid[1])
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)

        if args.command == "solve":
            timings = _cmd_solve(sc, out)
        elif args.command == "derivative":
            timings = _cmd_derivative(sc, out, args.jobs)
        elif args.command == "scan":
            timings = _cmd_scan(sc, scenario_text, out, args.jobs)
        elif args.command == "flow":
            timings = _cmd_flow(sc, out, args.tau, args.steps)
        else:
            timings = _cmd_validate(sc, out)
        _write_manifest(out, scenario_text, args.command, timings)
    except MembraneForgeError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
