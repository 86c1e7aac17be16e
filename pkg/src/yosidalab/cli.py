"""Command-line front end: one subcommand per lab operation.

Exit codes: 0 success / all checks passed, 1 check failure (report still
written), 2 usage or scenario parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ._util import canonical_json
from .errors import ScenarioParseError, YosidaLabError
from .operators import DelayGenerator, from_document, vector
from .yosida import yosida_distance
from .semigroup import evolve_linear_trajectory, time_one_map
from .dichotomy import check_hyperbolic, roughness_sweep, spectral_split, sweep_csv_rows
from .manifolds import compute_stable_manifold, compute_unstable_manifold
from .scenarios import CATALOG, build_system, load_scenario, run_scenario


def _load_operator(path: str):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioParseError(f"cannot read operator file {path!r}: {exc}") from exc
    return from_document(doc)


def _parse_mu_grid(spec: str):
    try:
        start, factor, count = spec.split(":")
        start, factor, count = float(start), float(factor), int(count)
    except ValueError as exc:
        raise ScenarioParseError(f"bad mu grid {spec!r}, expected start:factor:count") from exc
    return [start * factor**k for k in range(count)]


def _parse_floats(csv_text: str):
    try:
        return [float(tok) for tok in csv_text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ScenarioParseError(f"bad numeric list {csv_text!r}") from exc


def _emit(args, payload_json: str, csv_rows, stem: str):
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.format == "csv" and csv_rows is not None:
            (out_dir / f"{stem}.csv").write_text("\n".join(csv_rows) + "\n")
        (out_dir / f"{stem}.json").write_text(payload_json + "\n")
    if args.format == "csv" and csv_rows is not None:
        print("\n".join(csv_rows))
    else:
        print(payload_json)


def _cmd_distance(args):
    ops = [_load_operator(p) for p in args.operator]
    if len(ops) != 2:
        raise ScenarioParseError("distance needs exactly two --operator files")
    grid = _parse_mu_grid(args.mu_grid) if args.mu_grid else None
    est = yosida_distance(ops[0], ops[1], grid)
    _emit(args, canonical_json(est.to_document()), est.csv_rows(), "distance")
    return 0


def _cmd_evolve(args):
    op = _load_operator(args.operator[0])
    if args.state:
        coords = np.asarray(_parse_floats(args.state))
    else:
        coords = np.ones(op.dimension)
    x = vector(coords, op.norm_kind)
    times = np.linspace(0.0, args.t, args.samples)
    traj = evolve_linear_trajectory(op, times, x)
    doc = {
        "scheme": traj.scheme,
        "times": [float(t) for t in traj.times],
        "final": [float(v) for v in traj.final().coordinates],
    }
    _emit(args, canonical_json(doc), traj.csv_rows(), "evolve")
    return 0


def _cmd_dichotomy(args):
    op = _load_operator(args.operator[0])
    t1 = time_one_map(op)
    hyperbolic = check_hyperbolic(t1, args.gap_tol)
    doc = {"hyperbolic": hyperbolic}
    if hyperbolic:
        doc["split"] = spectral_split(t1, args.gap_tol).to_document()
    _emit(args, canonical_json(doc), None, "dichotomy")
    return 0


def _cmd_roughness_sweep(args):
    base = _load_operator(args.operator[0])
    direction = _load_operator(args.direction)
    eps = _parse_floats(args.eps_list)
    grid = _parse_mu_grid(args.mu_grid) if args.mu_grid else None
    report = roughness_sweep(base, direction, eps, args.gap_tol, grid)
    _emit(args, canonical_json(report), sweep_csv_rows(report), "roughness-sweep")
    return 0


def _cmd_manifold(args):
    doc = load_scenario(args.scenario)
    if not doc.get("system"):
        raise ScenarioParseError(f"scenario {doc['name']!r} carries no semilinear system")
    system = build_system(doc["system"])
    if args.r0:
        system = system.with_r0(args.r0)
    compute = compute_stable_manifold if args.stable else compute_unstable_manifold
    graph = compute(system, tol=args.tol, flow_steps=args.flow_steps)
    side = "stable" if args.stable else "unstable"
    _emit(args, canonical_json(graph.summary()), graph.csv_rows(), f"manifold-{side}")
    return 0


def _cmd_verify_bounds(args):
    report = run_scenario(args.scenario)
    out_dir = Path(args.out) if args.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"report-{report.scenario}.json"
    path.write_text(report.to_json() + "\n")
    for line in report.summary_lines():
        print(line)
    print(f"report: {path}")
    return 0 if report.overall_pass else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="yosidalab",
        description="Resolvent-distance calculus, dichotomy persistence, and invariant manifolds at desk scale",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, operators=0):
        for _ in range(operators):
            p.add_argument("--operator", action="append", default=None, help="operator JSON file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("distance", help="Yosida distance between two operator files")
    common(p, operators=1)
    p.add_argument("--mu-grid", default=None, help="start:factor:count")
    p.set_defaults(fn=_cmd_distance)

    p = sub.add_parser("evolve", help="linear evolution trajectory")
    common(p, operators=1)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--state", default=None, help="comma-separated initial coordinates")
    p.add_argument("--samples", type=int, default=17)
    p.set_defaults(fn=_cmd_evolve)

    p = sub.add_parser("dichotomy", help="hyperbolicity and spectral split of the time-1 map")
    common(p, operators=1)
    p.add_argument("--gap-tol", type=float, default=1e-6)
    p.set_defaults(fn=_cmd_dichotomy)

    p = sub.add_parser("roughness-sweep", help="dichotomy persistence under scaled perturbations")
    common(p, operators=1)
    p.add_argument("--direction", required=True, help="perturbation operator JSON file")
    p.add_argument("--eps-list", required=True, help="comma-separated perturbation sizes")
    p.add_argument("--gap-tol", type=float, default=1e-6)
    p.add_argument("--mu-grid", default=None)
    p.set_defaults(fn=_cmd_roughness_sweep)

    p = sub.add_parser("manifold", help="invariant manifold of a scenario's system")
    common(p)
    p.add_argument("--scenario", required=True, help=f"catalog name {CATALOG} or JSON path")
    p.add_argument("--r0", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--flow-steps", type=int, default=512)
    p.add_argument("--stable", action="store_true", help="compute the stable graph instead")
    p.set_defaults(fn=_cmd_manifold)

    p = sub.add_parser("verify-bounds", help="run a verification scenario and write its report")
    common(p)
    p.add_argument("--scenario", required=True, help=f"catalog name {CATALOG} or JSON path")
    p.set_defaults(fn=_cmd_verify_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except YosidaLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
