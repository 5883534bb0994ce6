"""Command-line front end: constants, regime classification, profile and
threshold solves, radial trajectories, PDE solves, and parallel parameter
sweeps with deterministic CSV/JSON output.

Exit codes: 0 success, 2 invalid parameters, 3 solver nonconvergence or
no-solution outcomes, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import halfplane as hp
from . import profile as profile_mod
from . import radial as radial_mod
from .regimes import (
    Params,
    ParameterDomainError,
    classify,
    critical_constants,
    exponents,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4

_SWEEP_TASKS = ("constants", "classify", "profile")


class NoSolutionError(RuntimeError):
    """A solve finished but produced no admissible solution."""


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    """Shortest round-trip representation, stable across platforms."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _meta(args, extra=None) -> dict:
    meta = {"tool": "singlab", "version": __version__,
            "subcommand": args.subcommand}
    for key in ("N", "p", "q", "M", "k", "r", "u0", "du0", "tol",
                "rmin", "rmax", "nr", "ntheta", "task", "grid"):
        if hasattr(args, key) and getattr(args, key) is not None:
            meta[key] = getattr(args, key)
    if extra:
        meta.update(extra)
    return meta


def _emit(args, meta: dict, fieldnames, rows) -> None:
    """Write rows as CSV or JSON to --out (atomically) or stdout."""
    if args.format == "json":
        payload = {"meta": meta, "data": rows}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        lines = [f"# singlab {__version__}",
                 "# " + json.dumps(meta, sort_keys=True),
                 ",".join(fieldnames)]
        for row in rows:
            lines.append(",".join(_fmt(row.get(name)) for name in fieldnames))
        text = "\n".join(lines) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _plot_base(args) -> str:
    if not args.out:
        raise ParameterDomainError("--plot requires --out")
    base, _ = os.path.splitext(args.out)
    return base


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _params_from(args) -> Params:
    return Params(args.N, args.p, args.q, args.M)


def cmd_constants(args) -> int:
    params = _params_from(args)
    row = {**exponents(params).to_dict(),
           **critical_constants(params).to_dict()}
    _emit(args, _meta(args), list(row.keys()), [row])
    return EXIT_OK


def cmd_classify(args) -> int:
    report = classify(_params_from(args))
    if args.format == "json":
        _emit(args, _meta(args), [], report.to_dict())
    else:
        rows = [{"label": lab, "citation": report.citations[lab]}
                for lab in sorted(report.labels)]
        _emit(args, _meta(args), ["label", "citation"], rows)
    return EXIT_OK


def _profile_problem(args) -> profile_mod.ProfileProblem:
    q_star = 2.0 * args.p / (args.p + 1.0)
    variant = {
        "half-sphere": profile_mod.HALF_SPHERE,
        "psi": profile_mod.PSI,
        "whole-sphere": profile_mod.WHOLE_SPHERE,
    }[args.variant]
    M = 0.0 if variant == profile_mod.PSI else args.M
    return profile_mod.ProfileProblem(
        Params(args.N, args.p, q_star, M), variant=variant
    )


def cmd_profile(args) -> int:
    problem = _profile_problem(args)
    sol = profile_mod.solve_min_profile(problem, rtol=args.tol)
    if sol is None:
        raise NoSolutionError(
            "no positive profile exists at these parameters"
        )
    meta = _meta(args, {
        "omega_at_pole": sol.omega_at_pole,
        "residual": sol.residual,
        "shots": sol.shots,
    })
    rows = [{"theta": float(t), "omega": float(w), "domega": float(v)}
            for t, w, v in zip(sol.theta, sol.omega, sol.domega)]
    _emit(args, meta, ["theta", "omega", "domega"], rows)
    if args.plot:
        from . import plots

        plots.profile_figure(sol, _plot_base(args) + ".png")
    return EXIT_OK


def cmd_threshold(args) -> int:
    lo, hi = profile_mod.existence_threshold(args.N, args.p, tol=args.tol)
    row = {"M_lo": lo, "M_hi": hi}
    _emit(args, _meta(args), list(row.keys()), [row])
    return EXIT_OK


def cmd_radial(args) -> int:
    if args.r is None or args.u0 is None:
        raise ParameterDomainError("radial requires --r r0:r1 and --u0")
    try:
        r0_s, r1_s = args.r.split(":")
        r0, r1 = float(r0_s), float(r1_s)
    except ValueError as exc:
        raise ParameterDomainError(f"--r must be r0:r1, got {args.r!r}") from exc
    params = _params_from(args)
    traj = radial_mod.integrate(params, r0, args.u0, args.du0, r1, tol=args.tol)
    extra = {"diverged": traj.diverged}
    if params.M > 0 and params.q < params.p and not traj.diverged:
        extra["ko_ratio"] = radial_mod.ko_check(traj)
    rows = [{"r": float(r), "u": float(u), "du": float(v)}
            for r, u, v in zip(traj.r, traj.u, traj.du)]
    _emit(args, _meta(args, extra), ["r", "u", "du"], rows)
    if args.plot:
        from . import plots

        plots.trajectory_figure(traj, _plot_base(args) + ".png")
    return EXIT_OK


def cmd_pde(args) -> int:
    params = _params_from(args)
    grid = hp.PolarGrid(args.rmin, args.rmax, args.nr, args.ntheta)
    field, report = hp.fundamental_solution(grid, params, args.k, tol=args.tol)
    diag = hp.diagnostics(field)
    ring = diag["near_ring_ratio_profile"]
    summary = {
        "radial_slope": diag["radial_slope"],
        "ko_ratio": diag["ko_ratio"],
        "near_ring_ratio_min": float(np.min(ring)),
        "near_ring_ratio_max": float(np.max(ring)),
    }
    meta = _meta(args, {"report": report.to_dict(), "diagnostics": summary})
    if args.format == "json":
        _emit(args, meta, [], {"report": report.to_dict(),
                               "diagnostics": summary})
    else:
        r, th = grid.r, grid.theta
        rows = [{"r": float(r[i]), "theta": float(th[j]),
                 "u": float(field.values[i, j])}
                for i in range(grid.n_r) for j in range(grid.n_theta)]
        _emit(args, meta, ["r", "theta", "u"], rows)
    if args.plot:
        from . import plots

        base = _plot_base(args)
        plots.field_figure(field, base + ".png")
        plots.slice_figure(field, base + "_slice.png")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _parse_axis(spec: str):
    """Parse one axis specification name=start:stop:count."""
    try:
        name, rng = spec.split("=")
        start_s, stop_s, count_s = rng.split(":")
        start, stop, count = float(start_s), float(stop_s), int(count_s)
    except ValueError as exc:
        raise ParameterDomainError(
            f"--grid must be axis=start:stop:count, got {spec!r}"
        ) from exc
    if name not in ("N", "p", "q", "M"):
        raise ParameterDomainError(f"unknown sweep axis {name!r}")
    if count < 0:
        raise ParameterDomainError("axis count must be >= 0")
    return name, np.linspace(start, stop, count)


def _sweep_point(task: str, base: dict) -> dict:
    """Evaluate one sweep point; exceptions are folded into an error column."""
    try:
        if task == "constants":
            params = Params(int(base["N"]), base["p"], base["q"], base["M"])
            return {**exponents(params).to_dict(),
                    **critical_constants(params).to_dict()}
        if task == "classify":
            params = Params(int(base["N"]), base["p"], base["q"], base["M"])
            return {"labels": ";".join(sorted(classify(params).labels))}
        # profile existence on the critical line q = 2p/(p+1)
        p = base["p"]
        problem = profile_mod.ProfileProblem(
            Params(int(base["N"]), p, 2.0 * p / (p + 1.0), base["M"]),
            variant=profile_mod.HALF_SPHERE,
        )
        sol = profile_mod.solve_min_profile(problem)
        if sol is None:
            return {"exists": 0, "omega_at_pole": None}
        return {"exists": 1, "omega_at_pole": sol.omega_at_pole}
    except Exception as exc:  # recorded per point, sweep continues
        return {"error": f"{type(exc).__name__}: {exc}"}


def _sweep_point_star(job):
    return _sweep_point(*job)


_SWEEP_FIELDS = {
    "constants": ["alpha", "beta", "gamma", "q_star", "p_crit", "q_bdry",
                  "m_star_star", "M_Np", "m_star", "omega0", "xi_M"],
    "classify": ["labels"],
    "profile": ["exists", "omega_at_pole"],
}


def cmd_sweep(args) -> int:
    if args.task not in _SWEEP_TASKS:
        raise ParameterDomainError(
            f"sweep task must be one of {_SWEEP_TASKS}, got {args.task!r}"
        )
    axes = [_parse_axis(spec) for spec in (args.grid or [])]
    if not axes:
        raise ParameterDomainError("sweep requires at least one --grid axis")
    names = [name for name, _ in axes]
    if len(set(names)) != len(names):
        raise ParameterDomainError("duplicate sweep axes")

    base = {"N": args.N, "p": args.p, "q": args.q, "M": args.M}
    points = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        point = dict(base)
        point.update(zip(names, (float(v) for v in combo)))
        points.append(point)

    jobs = [(args.task, point) for point in points]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_point_star, jobs))
    else:
        results = [_sweep_point_star(job) for job in jobs]

    fieldnames = ["index"] + names + _SWEEP_FIELDS[args.task] + ["error"]
    rows = []
    successes = 0
    for idx, (point, result) in enumerate(zip(points, results)):
        row = {"index": idx}
        row.update({name: point[name] for name in names})
        row.update(result)
        if "error" not in result:
            successes += 1
        rows.append(row)
    _emit(args, _meta(args), fieldnames, rows)
    if points and successes == 0:
        return EXIT_NONCONVERGENCE
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / dispatch
# ---------------------------------------------------------------------------


def _add_param_flags(sp, need_q=True):
    sp.add_argument("--N", type=int, default=3)
    sp.add_argument("--p", type=float, default=2.0)
    if need_q:
        sp.add_argument("--q", type=float, default=1.5)
        sp.add_argument("--M", type=float, default=1.0)


def _add_io_flags(sp):
    sp.add_argument("--out", type=str, default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--plot", action="store_true")
    sp.add_argument("--config", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singlab",
        description=__doc__.splitlines()[0],
    )
    parser.add_argument("--version", action="version",
                        version=f"singlab {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    sp = subs.add_parser("constants", help="critical exponents and constants")
    _add_param_flags(sp)
    _add_io_flags(sp)

    sp = subs.add_parser("classify", help="regime labels with citations")
    _add_param_flags(sp)
    _add_io_flags(sp)

    sp = subs.add_parser("profile", help="separable angular profile")
    _add_param_flags(sp, need_q=False)
    sp.add_argument("--M", type=float, default=1.0)
    sp.add_argument("--variant", choices=("half-sphere", "psi", "whole-sphere"),
                    default="half-sphere")
    sp.add_argument("--tol", type=float, default=1e-10)
    _add_io_flags(sp)

    sp = subs.add_parser("threshold", help="existence threshold bracket in M")
    _add_param_flags(sp, need_q=False)
    sp.add_argument("--tol", type=float, default=0.02)
    _add_io_flags(sp)

    sp = subs.add_parser("radial", help="radial trajectory integration")
    _add_param_flags(sp)
    sp.add_argument("--r", type=str, default=None, help="range r0:r1")
    sp.add_argument("--u0", type=float, default=None)
    sp.add_argument("--du0", type=float, default=0.0)
    sp.add_argument("--tol", type=float, default=1e-10)
    _add_io_flags(sp)

    sp = subs.add_parser("pde", help="half-plane fundamental solution")
    _add_param_flags(sp)
    sp.set_defaults(N=2)
    sp.add_argument("--k", type=float, default=1.0)
    sp.add_argument("--rmin", type=float, default=1e-4)
    sp.add_argument("--rmax", type=float, default=1.0)
    sp.add_argument("--nr", type=int, default=256)
    sp.add_argument("--ntheta", type=int, default=128)
    sp.add_argument("--tol", type=float, default=1e-8)
    _add_io_flags(sp)

    sp = subs.add_parser("sweep", help="parameter sweep of a per-point task")
    sp.add_argument("task", choices=_SWEEP_TASKS)
    _add_param_flags(sp)
    sp.add_argument("--grid", action="append", default=None,
                    metavar="axis=start:stop:count")
    sp.add_argument("--workers", type=int, default=1)
    _add_io_flags(sp)

    return parser


_HANDLERS = {
    "constants": cmd_constants,
    "classify": cmd_classify,
    "profile": cmd_profile,
    "threshold": cmd_threshold,
    "radial": cmd_radial,
    "pde": cmd_pde,
    "sweep": cmd_sweep,
}


def _apply_config(argv: list[str], parser: argparse.ArgumentParser):
    """Load --config JSON (if any) as defaults; command-line flags win."""
    if "--config" not in argv:
        return parser.parse_args(argv)
    path = argv[argv.index("--config") + 1]
    with open(path) as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ParameterDomainError("config file must hold a JSON object")
    args = parser.parse_args(argv)
    explicit = _explicit_flags(argv)
    for key, value in config.items():
        if key in ("config", "subcommand"):
            continue
        if not hasattr(args, key):
            raise ParameterDomainError(f"unknown config key {key!r}")
        if key not in explicit:
            setattr(args, key, value)
    return args


def _explicit_flags(argv: list[str]) -> set[str]:
    return {token[2:].split("=", 1)[0]
            for token in argv if token.startswith("--")}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        try:
            args = _apply_config(argv, parser)
        except SystemExit as exc:  # argparse reports its own diagnostics
            code = exc.code if isinstance(exc.code, int) else EXIT_INVALID
            return EXIT_OK if code == 0 else EXIT_INVALID
        return _HANDLERS[args.subcommand](args)
    except ParameterDomainError as exc:
        print(f"singlab: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (
        NoSolutionError,
        hp.NonconvergenceError,
        hp.SupersolutionConstructionError,
        profile_mod.ThresholdScanError,
    ) as exc:
        print(f"singlab: solver failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"singlab: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
