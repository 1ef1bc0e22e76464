"""Command-line entry point: ``hdg-interface {solve,convergence,verify}``."""
import argparse
from dataclasses import dataclass
import logging
import sys
import time

from .assembly import SchemeParams
from .errors import (AlignmentError, HDGError, InvalidParam, NoConvergence, NotPositiveDefinite,
                     SingularLocalBlock)
from .fem import RECTANGLE, TRIANGLE
from .mesh import build_mesh, mesh_metrics
from .norms import errors, rates
from .problem import PRESETS, preset
from .solver import solve_problem
from . import verify

log = logging.getLogger("hdg_interface")

EXIT_OK, EXIT_CONFIG, EXIT_ALIGNMENT, EXIT_SOLVER = 0, 2, 3, 4
ELEMENTS = {"q1": RECTANGLE, "p1": TRIANGLE}
DEFAULT_LEVELS = {"example1": [16, 32, 64, 128], "example2": [16, 32, 64], "patch": [2, 4, 8]}


@dataclass
class RunConfig:
    command: str
    preset: str
    element: str = "q1"
    scheme: str = "primary"
    eta: float = None
    n: int = 16
    levels: list = None
    solver: str = "direct"
    tol: float = 1e-12
    out: str = None
    ref_factor: int = 2
    etas: list = None

    def __post_init__(self):
        if self.levels is not None:
            check_levels(self.levels)

    @property
    def kind(self):
        return ELEMENTS[self.element]

    def params(self):
        return SchemeParams(variant=self.scheme, eta=self.eta)


def check_levels(levels):
    if len(levels) < 1 or levels[0] < 2:
        raise InvalidParam("levels must start at n >= 2")
    for a, b in zip(levels, levels[1:]):
        if b != 2 * a:
            raise InvalidParam(f"levels must double: {a} -> {b}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="hdg-interface",
                                     description="HDG solver for elliptic interface problems")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=PRESETS, default="example1")
    common.add_argument("--element", choices=sorted(ELEMENTS), default="q1")
    common.add_argument("--scheme", choices=["primary", "alternative"], default="primary")
    common.add_argument("--eta", type=float, default=None, help="penalty (default 10*lambda_max)")
    common.add_argument("--solver", choices=["direct", "cg"], default="direct")
    common.add_argument("--tol", type=float, default=1e-12, help="CG relative residual tolerance")
    common.add_argument("--out", default=None, help="output CSV path")

    p = sub.add_parser("solve", parents=[common], help="solve on one mesh")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--dump-mesh", default=None, help="write the mesh in text format")

    p = sub.add_parser("convergence", parents=[common], help="convergence study")
    p.add_argument("--levels", type=_int_list, default=None)
    p.add_argument("--ref-factor", type=int, default=2,
                   help="reference mesh = finest level times this (reference-solution presets)")

    p = sub.add_parser("verify", parents=[common], help="coercivity and norm certificates")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--etas", type=_float_list, default=None, help="penalty sweep")
    return parser


def run_solve(cfg, dump_mesh=None):
    geom, problem = preset(cfg.preset)
    mesh = build_mesh(geom, cfg.n, cfg.kind)
    if dump_mesh:
        mesh.dump(dump_mesh)
    t0 = time.perf_counter()
    sol = solve_problem(mesh, problem, cfg.params(), cfg.solver, cfg.tol)
    elapsed = time.perf_counter() - t0
    h, rho, nu = mesh_metrics(mesh)
    info = sol.info
    summary = {
        "preset": cfg.preset, "element": cfg.element, "scheme": cfg.scheme, "n": cfg.n,
        "h": h, "nu1": nu, "full_dofs": info["full_dim"], "condensed_dofs": info["condensed_dim"],
        "solver": cfg.solver, "iterations": info["iterations"], "residual": info["residual"],
        "seconds": elapsed,
    }
    if problem.has_exact:
        summary["E_h"], summary["e_h"] = errors(sol, mesh, problem)
    lines = [f"{k:>15}: {v}" for k, v in summary.items()]
    print("\n".join(lines))
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(",".join(summary) + "\n")
            fh.write(",".join(str(v) for v in summary.values()) + "\n")
    return summary


def convergence_study(cfg):
    geom, problem = preset(cfg.preset)
    levels = cfg.levels or DEFAULT_LEVELS[cfg.preset]
    check_levels(levels)
    if len(levels) < 3:
        raise InvalidParam("a convergence study needs at least 3 levels")
    params = cfg.params()
    reference = None
    if not problem.has_exact:
        ref_mesh = build_mesh(geom, levels[-1] * cfg.ref_factor, cfg.kind)
        log.info("reference solution on %s", ref_mesh.name)
        reference = (solve_problem(ref_mesh, problem, params, cfg.solver, cfg.tol), ref_mesh)
    rows = []
    for n in levels:
        mesh = build_mesh(geom, n, cfg.kind)
        sol = solve_problem(mesh, problem, params, cfg.solver, cfg.tol)
        E, e = errors(sol, mesh, problem, reference)
        rows.append((1.0 / n, E, e))
        log.info("n=%d E_h=%.3e e_h=%.3e", n, E, e)
    return rates(rows)


def run_convergence(cfg):
    record = convergence_study(cfg)
    text = record.to_csv(cfg.out)
    print(record.table() if cfg.out else text, end="\n" if cfg.out else "")
    return record


def run_verify(cfg):
    geom, problem = preset(cfg.preset)
    mesh = build_mesh(geom, cfg.n, cfg.kind)
    eta = cfg.params().eta_bounds(mesh, problem)[0]
    etas = cfg.etas or [eta]
    reports = verify.eta_sweep(mesh, problem, etas)
    text = verify.reports_csv(reports, cfg.out)
    print(text, end="")
    print(f"# eta* estimate: {verify.eta_star_estimate(mesh, problem):.6g}")
    print(f"# norm equivalence C0 (eta={eta:g}): {verify.norm_equivalence_constant(mesh, eta):.6g}")
    print(f"# boundedness constant (eta={eta:g}): {verify.boundedness_constant(mesh, problem, eta):.6g}")
    return reports


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig(command=args.command, preset=args.preset, element=args.element,
                        scheme=args.scheme, eta=args.eta, n=getattr(args, "n", 16),
                        levels=getattr(args, "levels", None), solver=args.solver, tol=args.tol,
                        out=args.out, ref_factor=getattr(args, "ref_factor", 2),
                        etas=getattr(args, "etas", None))
        if cfg.command == "solve":
            run_solve(cfg, args.dump_mesh)
        elif cfg.command == "convergence":
            run_convergence(cfg)
        else:
            run_verify(cfg)
    except AlignmentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALIGNMENT
    except (NotPositiveDefinite, NoConvergence, SingularLocalBlock) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except HDGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def entry():
    sys.exit(main())
