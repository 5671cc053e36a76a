"""``ripsolve`` command line.

Exit codes: 0 success, 1 validation or solver failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io, solutions
from .catalog import IDS, ExampleSpec, catalog
from .curves import BVTrajectory, ParametrizedCurve, Trajectory
from .errors import DomainError, PreconditionError, RipsolveError, SolverError
from .plotting import emit_plot
from .reparam import project_to_bv, reparametrize
from .systems import System, system_from_dict
from .viscous import SolverOptions, default_grid, solve_viscous

FORMATS = ("csv", "json", "svg")


class UsageError(Exception):
    pass


def _floats(text: str) -> list:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _formats(text: str) -> list:
    out = [x.strip().lower() for x in str(text).split(",") if x.strip()]
    bad = [x for x in out if x not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown formats {bad}; choose from {', '.join(FORMATS)}")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ripsolve", description="Rate-independent systems: viscous "
                                     "approximation, vanishing-viscosity limits and solution validation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--system", default=None,
                       help=f"catalog id ({', '.join(IDS)}) or path to a system JSON document")
        p.add_argument("--delta", type=float, default=-0.5, help="perturbation for ex53")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", type=_formats, default=["csv", "json"], help="comma list of csv,json,svg")
        p.add_argument("--config", default=None, help="JSON file with default values for any flag")
        p.add_argument("--q0", type=_floats, default=None, help="initial state (comma list)")

    p = sub.add_parser("solve-viscous", help="viscous minimizing-movement solve")
    common(p)
    p.add_argument("--eps", type=float, default=1e-2)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)

    p = sub.add_parser("sweep", help="vanishing-viscosity sweep and limit projection")
    common(p)
    p.add_argument("--eps", type=_floats, default=list(solutions.DEFAULT_EPS))
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--convention", choices=("left", "right"), default="left")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("solve-energetic", help="incremental global minimization")
    common(p)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--search-points", type=int, default=None)

    p = sub.add_parser("reparam", help="arclength reparametrization of a trajectory")
    common(p)
    p.add_argument("--input", required=True, help="trajectory file or catalog reference name")

    p = sub.add_parser("validate", help="check a solution concept")
    common(p)
    p.add_argument("--concept", required=True, choices=("bv", "energetic", "local", "parametrized", "phi"))
    p.add_argument("--input", required=True, help="file or catalog reference name")
    p.add_argument("--compare", default=None, help="second curve for --concept phi")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--slope-tol", type=float, default=None)

    p = sub.add_parser("compare", help="all constructors on one system with a concept matrix")
    common(p)
    p.add_argument("--eps", type=_floats, default=[1e-2, 3e-3, 1e-3])
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--skip-sweep", action="store_true")

    p = sub.add_parser("example", help="dump catalog references")
    p.add_argument("id", choices=IDS)
    p.add_argument("--delta", type=float, default=-0.5)
    p.add_argument("--eps", type=float, default=1e-2, help="viscosity for viscous references")
    p.add_argument("--out", default=None)
    p.add_argument("--format", type=_formats, default=["csv", "json"])
    p.add_argument("--config", default=None)
    return parser


def _apply_config(args, argv: list):
    if not getattr(args, "config", None):
        return args
    path = Path(args.config)
    if not path.exists():
        raise UsageError(f"config file {path} does not exist")
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    given = {tok.split("=")[0] for tok in argv if tok.startswith("--")}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if f"--{dest.replace('_', '-')}" in given or not hasattr(args, dest):
            continue
        if dest in ("eps", "q0") and isinstance(value, str):
            value = _floats(value)
        if dest == "format" and isinstance(value, str):
            value = _formats(value)
        setattr(args, dest, value)
    return args


# -- helpers ----------------------------------------------------------------

def _spec(args) -> ExampleSpec | None:
    source = args.system
    if source is None:
        raise UsageError("--system is required")
    if source.lower() in IDS:
        return catalog(source, delta=args.delta)
    return None


def _system(args) -> tuple[System, ExampleSpec | None]:
    spec = _spec(args)
    if spec is not None:
        return spec.system, spec
    path = Path(args.system)
    if not path.exists():
        raise UsageError(f"--system {args.system!r} is neither a catalog id nor an existing file")
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    system = system_from_dict(doc)
    if doc.get("energy", {}).get("kind") == "catalog":
        spec = catalog(doc["energy"]["id"], delta=doc["energy"].get("delta", args.delta))
    return system, spec


def _q0(args, system: System, spec) -> np.ndarray:
    if args.q0 is not None:
        return system.point(args.q0)
    if spec is not None:
        return spec.q0
    raise UsageError("--q0 is required for systems outside the catalog")


def _out(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args, name: str, obj, formats=None):
    out = _out(args)
    formats = formats or args.format
    written = []
    for f in formats:
        target = out / f"{name}.{f}"
        if f == "svg":
            if isinstance(obj, (Trajectory, BVTrajectory, ParametrizedCurve, list)):
                emit_plot(obj, target, name)
                written.append(target)
            continue
        if f == "csv" and not isinstance(obj, (Trajectory, BVTrajectory, ParametrizedCurve)):
            continue
        io.save(obj, target)
        written.append(target)
    return written


def _resolve_input(args, system, spec, name: str):
    """A file path or a catalog reference name (``energetic`` or ``energetic_reference``)."""
    path = Path(name)
    if path.exists():
        return io.load(path, system)
    key = name[:-len("_reference")] if name.endswith("_reference") else name
    if spec is not None and key in spec.reference:
        ref = spec.reference[key]
        if isinstance(ref, (BVTrajectory, ParametrizedCurve)):
            return ref
        if key == "viscous":
            grid = default_grid(system, 1e-3)
            return Trajectory(grid, ref(getattr(args, "eps", 1e-2) or 1e-2)(grid)[:, None], {"source": "catalog"})
    raise UsageError(f"input {name!r} is neither a file nor a reference of the selected system")


def _as_bv(obj) -> BVTrajectory:
    if isinstance(obj, BVTrajectory):
        return obj
    if isinstance(obj, Trajectory):
        return obj.as_bv()
    if isinstance(obj, ParametrizedCurve):
        return project_to_bv(obj, "left")
    raise UsageError(f"cannot interpret {type(obj).__name__} as a BV trajectory")


def _as_curve(system, obj) -> ParametrizedCurve:
    if isinstance(obj, ParametrizedCurve):
        return obj
    return reparametrize(system, obj)


def _opts(args) -> SolverOptions:
    return SolverOptions(step=args.tau)


# -- commands ---------------------------------------------------------------

def cmd_solve_viscous(args) -> int:
    system, spec = _system(args)
    q0 = _q0(args, system, spec)
    grid = default_grid(system, args.tau, args.t_end)
    traj = solve_viscous(system, q0, grid, args.eps, _opts(args))
    _emit(args, "viscous", traj)
    print(f"solved {system.name} with eps={args.eps:g}: {traj.times.size} samples, "
          f"{len(traj.meta['fast_steps'])} fast steps")
    return 0


def cmd_sweep(args) -> int:
    system, spec = _system(args)
    q0 = _q0(args, system, spec)
    eps = sorted(args.eps, reverse=True)
    res = solutions.vanishing_viscosity(system, q0, None, eps, _opts(args), convention=args.convention,
                                        threads=args.threads)
    _emit(args, "limit_curve", res.curve)
    _emit(args, "limit_bv", res.bv)
    for e, run in zip(res.eps, res.runs):
        _emit(args, f"viscous_eps_{e:g}", run, [f for f in args.format if f != "svg"])
    if "svg" in args.format:
        emit_plot([(f"eps={e:g}", r) for e, r in zip(res.eps, res.runs)], _out(args) / "sweep.svg", "sweep")
    io.save({"diagnostics": res.diagnostics, "reports": res.reports}, _out(args) / "sweep.json")
    d = res.diagnostics
    print(f"sweep over eps={eps}: cauchy={['%.3g' % c for c in d['cauchy']]}, converged={d['converged']}, "
          f"jumps at {d['jump_times']}")
    for w in d["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    for name, rep in res.reports.items():
        print(rep.summary())
    return 0


def cmd_solve_energetic(args) -> int:
    system, spec = _system(args)
    q0 = _q0(args, system, spec)
    count = max(int(round(system.horizon / args.dt)), 1)
    grid = np.linspace(0.0, system.horizon, count + 1)
    bv = solutions.solve_energetic(system, q0, grid, args.search_points)
    _emit(args, "energetic", bv)
    print(f"energetic solution with {len(bv.jumps)} jumps at {[round(j.t, 12) for j in bv.jumps]}")
    return 0


def cmd_reparam(args) -> int:
    system, spec = _system(args)
    obj = _resolve_input(args, system, spec, args.input)
    curve = _as_curve(system, obj)
    _emit(args, "curve", curve)
    print(f"arclength curve with {curve.params.size} samples, span {curve.span:.12g}, "
          f"normalization error {curve.normalization_error:.3g}")
    return 0


def cmd_validate(args) -> int:
    system, spec = _system(args)
    obj = _resolve_input(args, system, spec, args.input)
    concept = args.concept
    if concept == "phi":
        if not args.compare:
            raise UsageError("--concept phi needs --compare")
        other = _as_curve(system, _resolve_input(args, system, spec, args.compare))
        ev = solutions.phi_order(system, _as_curve(system, obj), other, tol=args.tol)
        report = solutions.ValidationReport("phi_minimal", notes=f"order: {ev.order}")
        report.add("phi_order", 0.0 if ev.precedes else 1.0, 0.0, f"agreement up to s = {ev.disagreement_S:.9g}")
    elif concept == "parametrized":
        report = solutions.validate_parametrized(system, _as_curve(system, obj), tol=args.tol,
                                                 xi_tol=args.slope_tol or 1e-8)
    elif concept == "bv":
        report = solutions.validate_bv(system, _as_bv(obj), tol=args.tol, slope_tol=args.slope_tol)
    elif concept == "energetic":
        report = solutions.validate_energetic(system, _as_bv(obj), tol=args.tol)
    else:
        report = solutions.validate_local(system, _as_bv(obj), tol=args.tol, slope_tol=args.slope_tol)
    print(report.summary())
    if args.out:
        io.save(report, _out(args) / f"validate_{concept}.json")
    return 0 if report.verdict else 1


def cmd_compare(args) -> int:
    system, spec = _system(args)
    q0 = _q0(args, system, spec)
    candidates = {}
    if spec is not None:
        for name, ref in spec.reference.items():
            if isinstance(ref, BVTrajectory):
                candidates[f"reference:{name}"] = ref
    tols = {}
    try:
        grid = np.linspace(0.0, system.horizon, 601)
        candidates["solve_energetic"] = solutions.solve_energetic(system, q0, grid)
        # balance errors of the discrete scheme are of the order of the time step
        tols["solve_energetic"] = 10.0 * (float(np.max(np.diff(grid))) + solutions.search_spacing(system))
    except PreconditionError as exc:
        print(f"solve_energetic skipped: {exc}", file=sys.stderr)
    if not args.skip_sweep:
        res = solutions.vanishing_viscosity(system, q0, None, sorted(args.eps, reverse=True), _opts(args),
                                            validate=False)
        candidates["vanishing_viscosity"] = res.bv
        tols["vanishing_viscosity"] = solutions.sweep_tolerance(res.eps[-1], res.diagnostics["tau"])
    matrix = {}
    for name, bv in candidates.items():
        tol = tols.get(name, 1e-6)
        row = {
            "bv": solutions.validate_bv(system, bv, tol=tol).verdict,
            "energetic": solutions.validate_energetic(system, bv, tol=tol, include_gamma_star=False).verdict,
            "local": solutions.validate_local(system, bv, tol=tol).verdict,
        }
        matrix[name] = row
    width = max(len(n) for n in matrix) if matrix else 10
    print(f"{'candidate':<{width}}  bv     energetic  local")
    for name, row in matrix.items():
        print(f"{name:<{width}}  {'yes' if row['bv'] else 'no':<6} {'yes' if row['energetic'] else 'no':<10} "
              f"{'yes' if row['local'] else 'no'}")
    io.save({"system": system.name, "matrix": matrix}, _out(args) / "compare.json")
    return 0


def cmd_example(args) -> int:
    spec = catalog(args.id, delta=args.delta)
    system = spec.system
    names = []
    for name, ref in spec.reference.items():
        if isinstance(ref, (BVTrajectory, ParametrizedCurve)):
            _emit(args, f"{spec.id}_{name}", ref)
            names.append(name)
        elif name == "viscous":
            grid = default_grid(system, 1e-3)
            traj = Trajectory(grid, ref(args.eps)(grid)[:, None], {"source": "catalog", "epsilon": args.eps})
            _emit(args, f"{spec.id}_viscous_eps_{args.eps:g}", traj)
            names.append(name)
    io.save({"id": spec.id, "notes": spec.notes, "params": spec.params, "system": system.to_dict(),
             "q0": spec.q0, "references": names}, _out(args) / f"{spec.id}.json")
    print(f"{spec.id}: wrote references {', '.join(names)}")
    return 0


COMMANDS = {
    "solve-viscous": cmd_solve_viscous, "sweep": cmd_sweep, "solve-energetic": cmd_solve_energetic,
    "reparam": cmd_reparam, "validate": cmd_validate, "compare": cmd_compare, "example": cmd_example,
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        args = _apply_config(args, argv)
        return COMMANDS[args.command](args)
    except (UsageError, DomainError, argparse.ArgumentTypeError) as exc:
        print(f"ripsolve: error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, PreconditionError, RipsolveError) as exc:
        print(f"ripsolve: failure: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
