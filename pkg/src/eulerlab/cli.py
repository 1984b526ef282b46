"""Command-line front end: ``eulerlab <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 domain or singularity error,
3 verification failure, 4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import evolve as ev
from . import io
from .calculus import StencilSpec
from .errors import BlowUpError, ConvergenceError, DomainError
from .lattice import SampleLattice
from .reduction_ode import IntegratorConfig, build_numeric_reduction, reconstruct_and_verify
from .residuals import N_CONSTRAINTS, constraint_check, residual_norms
from .solutions import (
    CASE_CATALOGUE,
    Case,
    SolutionParams,
    admissible,
    errata_report,
    printed_case_solution,
)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_VERIFY, EXIT_SOLVER = 0, 1, 2, 3, 4

# parameters used when only --case is given
CASE_DEFAULTS = {
    Case.CASE1: SolutionParams(0.0, 0.0),
    Case.CASE2: SolutionParams(0.0, 2.0),
    Case.CASE3: SolutionParams(1.0, 1.0, 1.0),
    Case.CASE4: SolutionParams(2.0, 1.0),
    Case.CASE5: SolutionParams(3.0, 1.0),
}

log = logging.getLogger("eulerlab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _case_arg(s: str) -> Case:
    for c in Case:
        if s in (c.value, c.name, str(c.number)):
            return c
    raise argparse.ArgumentTypeError(f"unknown case {s!r}")


def _add_params(p):
    g = p.add_argument_group("solution parameters")
    g.add_argument("--c1", type=float)
    g.add_argument("--c2", type=float)
    g.add_argument("--c3", type=float, default=None, help="constant f for c1 = 1")
    g.add_argument("--case", type=_case_arg, help="case tag or number; alone it selects default parameters")
    g.add_argument("--amplitude", type=float, default=1.0, help="profile amplitude C")


def _add_lattice(p, nx=21, nt=5, t_range=(1.0, 2.0)):
    g = p.add_argument_group("lattice")
    g.add_argument("--x-min", type=float, default=-2.0)
    g.add_argument("--x-max", type=float, default=-1.0)
    g.add_argument("--y-min", type=float, default=-2.0)
    g.add_argument("--y-max", type=float, default=-1.0)
    g.add_argument("--nx", type=int, default=nx)
    g.add_argument("--ny", type=int, default=nx)
    g.add_argument("--t", type=float, nargs="+", help="explicit time values")
    g.add_argument("--t-min", type=float, default=t_range[0])
    g.add_argument("--t-max", type=float, default=t_range[1])
    g.add_argument("--nt", type=int, default=nt)
    g.add_argument("--allow-skip", action="store_true", help="skip inadmissible points instead of failing")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="eulerlab", description="Similarity solutions of the 2D Euler equations")
    ap.add_argument("--params-file", help="newline-delimited key=value pairs, same names as the flags")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cases", help="list the solution cases")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("sample", help="evaluate a case solution on a lattice")
    _add_params(p)
    _add_lattice(p, nx=11, nt=1, t_range=(1.0, 1.0))
    p.add_argument("--out", help="CSV path (default: standard output)")
    p.add_argument("--vtk", help="also write legacy VTK (single time only)")

    p = sub.add_parser("residual", help="Euler residual norms of a case solution")
    _add_params(p)
    _add_lattice(p)
    p.add_argument("--method", choices=("jet", "fd"), default="jet")
    p.add_argument("--fd-h", type=float, default=None, help="FD step (default scales with |coord|)")
    p.add_argument("--fd-order", type=int, choices=(2, 4), default=4)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("constraints", help="check the 18 coefficient-ratio relations on random points")
    _add_params(p)
    _add_lattice(p)
    p.add_argument("--n-points", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--relative", action="store_true")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("verify-reduction", help="integrate the reduced ODEs and check the rebuilt flow")
    _add_params(p)
    _add_lattice(p, nx=11)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("evolve", help="run the bounded-patch solver against a case solution")
    _add_params(p)
    g = p.add_argument_group("patch")
    g.add_argument("--x-min", type=float, default=0.0)
    g.add_argument("--x-max", type=float, default=1.0)
    g.add_argument("--y-min", type=float, default=0.0)
    g.add_argument("--y-max", type=float, default=1.0)
    g.add_argument("--nx", type=int, default=32)
    g.add_argument("--ny", type=int, default=None)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=0.1)
    p.add_argument("--cfl", type=float, default=0.5)
    p.add_argument("--scheme", choices=("chorin", "projected"), default="chorin")
    p.add_argument("--poisson-tol", type=float, default=1e-10)
    p.add_argument("--poisson-max-iter", type=int, default=50000)
    p.add_argument("--omega", type=float, default=1.7)
    p.add_argument("--div-tol", type=float, default=ev.DIV_LIMIT)
    p.add_argument("--resolutions", type=int, nargs="+", help="run a convergence study instead")
    p.add_argument("--min-order", type=float, default=0.8)
    p.add_argument("--dump-dir", help="write per-step fields here")
    p.add_argument("--dump-format", choices=("csv", "vtk"), default="csv")
    p.add_argument("--dump-every", type=int, default=1)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("errata", help="compare printed case formulas with the reduction map")
    _add_params(p)
    _add_lattice(p, nx=5, nt=3, t_range=(0.5, 1.0))
    # a box where every printed formula stays real for the default parameters
    p.set_defaults(x_min=0.0, x_max=0.2, y_min=0.0, y_max=0.2)
    p.add_argument("--tol", type=float, default=1e-12)
    return ap


def _expand_params_file(argv):
    """Splice ``--params-file`` entries in as flags; explicit flags win."""
    argv = list(argv)
    for i, a in enumerate(argv):
        if a == "--params-file" or a.startswith("--params-file="):
            if "=" in a:
                path, j = a.split("=", 1)[1], i + 1
            else:
                if i + 1 >= len(argv):
                    raise UsageError("--params-file needs a path")
                path, j = argv[i + 1], i + 2
            break
    else:
        return argv
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read params file {path}: {exc}") from exc
    extra = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        extra += [f"--{k.replace('_', '-')}", *v.split()]
    rest = argv[:i] + argv[j:]
    # options must follow the subcommand name
    cmd = next((k for k, a in enumerate(rest) if not a.startswith("-")), len(rest))
    return rest[: cmd + 1] + extra + rest[cmd + 1:]


def _params(a) -> SolutionParams:
    if a.c1 is None and a.c2 is None:
        if a.case is None:
            raise UsageError("give --c1/--c2 or --case")
        prm = CASE_DEFAULTS[a.case]
        if a.c3 is not None:
            prm = replace(prm, c3=a.c3)
        return prm
    if a.c1 is None or a.c2 is None:
        raise UsageError("--c1 and --c2 go together")
    c3 = a.c3 if a.c3 is not None else (1.0 if a.c1 == 1 else 0.0)
    prm = SolutionParams(a.c1, a.c2, c3)
    if a.case is not None and prm.case is not a.case:
        raise UsageError(f"parameters select {prm.case.value}, not {a.case.value}")
    return prm


def _lattice(a) -> SampleLattice:
    t = tuple(a.t) if a.t else tuple(np.linspace(a.t_min, a.t_max, a.nt)) if a.nt > 0 else ()
    try:
        return SampleLattice(a.x_min, a.x_max, a.nx, a.y_min, a.y_max, a.ny, t)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(obj, as_json: bool, text: str):
    print(json.dumps(obj, indent=2, sort_keys=True) if as_json else text)


def _report_text(kind, rep, tol, ok):
    wp = ", ".join(f"{v:.6g}" for v in rep.worst_point)
    return (f"{kind}: max_abs={rep.max_abs:.3e} l2={rep.l2:.3e} worst=({wp}) "
            f"skipped={rep.skipped} tol={tol:g} {'PASS' if ok else 'FAIL'}")


def cmd_cases(a) -> int:
    rows = [{"tag": c.value, "number": c.number, "constraints": CASE_CATALOGUE[c]} for c in Case]
    text = "\n".join(f"{r['number']}  {r['tag']:<24} {r['constraints']}" for r in rows)
    _emit(rows, a.json, text)
    return EXIT_OK


def cmd_sample(a) -> int:
    prm, lat = _params(a), _lattice(a)
    rec, skipped = io.sample(prm, lat, a.allow_skip, a.amplitude)
    if len(rec) == 0:
        raise UsageError("no admissible lattice points")
    if a.out:
        io.write_csv(rec, a.out)
    else:
        w = sys.stdout
        w.write(",".join(io.COLUMNS) + "\n")
        for row in zip(*rec.ordered().columns()):
            w.write(",".join(format(v, io.FLOAT_FMT) for v in row) + "\n")
    if a.vtk:
        io.write_vtk(rec, a.vtk, title=f"eulerlab {prm.case.value}")
    if skipped:
        log.warning("skipped %d inadmissible points", skipped)
    return EXIT_OK


def cmd_residual(a) -> int:
    prm, lat = _params(a), _lattice(a)
    spec = StencilSpec(a.fd_h, a.fd_order) if a.method == "fd" else None
    rep = residual_norms(prm, lat, a.method, spec, a.allow_skip, a.amplitude)
    ok = rep.max_abs < a.tol
    out = rep.to_dict() | {"case": prm.case.value, "tol": a.tol, "pass": ok}
    _emit(out, a.json, _report_text("residual", rep, a.tol, ok))
    return EXIT_OK if ok else EXIT_VERIFY


def _random_points(prm, a, n, rng):
    """Uniform admissible points in the lattice box (rejection sampling)."""
    t_lo, t_hi = (min(a.t), max(a.t)) if a.t else (a.t_min, a.t_max)
    got = []
    for _ in range(50):
        x = rng.uniform(a.x_min, a.x_max, 4 * n)
        y = rng.uniform(a.y_min, a.y_max, 4 * n)
        t = rng.uniform(t_lo, t_hi, 4 * n)
        ok = admissible(prm, x, y, t)
        got.append(np.stack([x[ok], y[ok], t[ok]]))
        if sum(g.shape[1] for g in got) >= n:
            break
    pts = np.concatenate(got, axis=1)[:, :n]
    if pts.shape[1] < n:
        raise DomainError(f"found only {pts.shape[1]} admissible points in the box")
    return pts


def cmd_constraints(a) -> int:
    prm = _params(a)
    if a.n_points < 1:
        raise UsageError("--n-points must be positive")
    x, y, t = _random_points(prm, a, a.n_points, np.random.default_rng(a.seed))
    r = np.abs(constraint_check(prm, x, y, t, relative=a.relative))
    per = r.max(axis=1)
    k = int(np.argmax(r.max(axis=0)))
    worst = float(per.max())
    ok = worst < a.tol
    out = {
        "case": prm.case.value, "n_points": int(x.size), "seed": a.seed, "tol": a.tol,
        "max_abs": worst, "per_constraint": {f"Gamma{i + 1}": float(v) for i, v in enumerate(per)},
        "worst_point": [float(x[k]), float(y[k]), float(t[k])], "pass": ok,
    }
    text = "\n".join(f"Gamma{i + 1:<3d} {v:.3e}" for i, v in enumerate(per))
    text += f"\nconstraints: {N_CONSTRAINTS} relations on {x.size} points, max={worst:.3e} {'PASS' if ok else 'FAIL'}"
    _emit(out, a.json, text)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_verify_reduction(a) -> int:
    prm, lat = _params(a), _lattice(a)
    cfg = IntegratorConfig(dt=a.dt)
    flow = build_numeric_reduction(prm, lat, cfg, a.amplitude)
    rep = reconstruct_and_verify(prm, (flow.f, flow.g), flow.W, lat)
    ok = rep.max_abs < a.tol
    out = rep.to_dict() | {"case": prm.case.value, "dt": a.dt, "amplitude": a.amplitude,
                           "tol": a.tol, "pass": ok}
    _emit(out, a.json, _report_text("verify-reduction", rep, a.tol, ok))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_evolve(a) -> int:
    prm = _params(a)
    try:
        grid = ev.PatchGrid.on(a.nx, a.ny, (a.x_min, a.x_max), (a.y_min, a.y_max))
        cfg = ev.EvolveConfig(prm, grid, a.t0, a.t1, a.cfl, a.poisson_tol,
                              a.poisson_max_iter, a.omega, a.amplitude, a.scheme)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if a.resolutions:
        if len(a.resolutions) < 3:
            raise UsageError("--resolutions needs at least three values")
        study = ev.convergence_study(cfg, a.resolutions, a.min_order)
        lines = [f"{r['n']:>5d} h={r['h']:.4g} l2_u={r['l2_u']:.3e} max_div={r['max_div']:.2e}"
                 + (f" order={r['order']:.3f}" if "order" in r else "") for r in study["rows"]]
        lines.append(f"fitted order {study['order']:.3f} "
                     f"{'DEGRADED' if study['degraded'] else 'OK'}")
        _emit(study | {"case": prm.case.value}, a.json, "\n".join(lines))
        return EXIT_VERIFY if study["degraded"] else EXIT_OK

    dump = None
    if a.dump_dir:
        out_dir = Path(a.dump_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        every = max(1, a.dump_every)

        def dump(state, n):
            if n % every:
                return
            rec = io.evolve_records(state, grid)
            if a.dump_format == "csv":
                io.write_csv(rec, out_dir / f"step_{n:06d}.csv")
            else:
                io.write_vtk(rec, out_dir / f"step_{n:06d}.vtk", title=f"eulerlab evolve step {n}")

    rep = ev.run(cfg, dump)
    ok = rep.max_div < a.div_tol
    out = rep.to_dict() | {"case": prm.case.value, "div_tol": a.div_tol, "pass": ok}
    text = (f"evolve {prm.case.value} {grid.nx}x{grid.ny}: steps={rep.steps} "
            f"l2_u={rep.l2_u:.3e} max_u={rep.max_u:.3e} l2_p={rep.l2_p_gauge_free:.3e} "
            f"max_div={rep.max_div:.2e} {'PASS' if ok else 'FAIL'}")
    _emit(out, a.json, text)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_errata(a) -> int:
    prm, lat = _params(a), _lattice(a)
    X, Y, T = lat.points()
    ok = admissible(prm, X, Y, T)
    if not ok.all() and not a.allow_skip:
        raise DomainError(f"{int(ok.size - ok.sum())} lattice points are outside the domain")
    pts, undefined = [], 0
    for p in zip(X[ok], Y[ok], T[ok]):
        try:
            printed_case_solution(prm.case, prm, *p)
        except DomainError:
            undefined += 1  # printed formula leaves its real domain here
            continue
        pts.append(p)
    if not pts:
        raise DomainError("the printed formulas are undefined on every lattice point")
    rep = errata_report(prm, pts, a.tol)
    rep["printed_undefined"] = undefined
    print(json.dumps(rep, indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "cases": cmd_cases,
    "sample": cmd_sample,
    "residual": cmd_residual,
    "constraints": cmd_constraints,
    "verify-reduction": cmd_verify_reduction,
    "evolve": cmd_evolve,
    "errata": cmd_errata,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        a = build_parser().parse_args(_expand_params_file(argv))
        logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[a.command](a)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, BlowUpError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
