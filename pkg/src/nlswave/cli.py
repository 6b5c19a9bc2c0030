"""Command-line front end.

    nlswave mesh gen --shape square --n 8 -o square8.mesh
    nlswave mesh info square8.mesh
    nlswave run --problem example2 --levels 16 --taus 1/64
    nlswave converge --study space --problem example2 --degree 1
    nlswave stability --problem example2 --taus 0.1,0.05,0.01
    nlswave energy --problem example2 --T 10 --taus 0.05

Exit codes: 0 success, 1 usage/config error, 2 solver failure,
3 acceptance threshold missed (``--check``).
"""
import argparse
import json
import logging
from pathlib import Path
import sys

import numpy as np

from . import mesh as meshmod
from . import studies
from .fem import build_space
from .studies import StudyError, load_config, parse_number_list

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _fraction_list(text):
    try:
        return parse_number_list(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _int_list(text):
    try:
        return parse_number_list(text, int)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _add_study_flags(p):
    p.add_argument("--config", help="flat 'key = value' config file; flags override it")
    p.add_argument("--problem", choices=["example1", "example2", "zero"])
    p.add_argument("--degree", type=int, choices=[1, 2])
    p.add_argument("--levels", type=_int_list, help="mesh levels: n for the square, refinement level for the disk")
    p.add_argument("--taus", type=_fraction_list, help="time steps, e.g. '1/16,1/32'")
    p.add_argument("--T", type=lambda s: _fraction_list(s)[0], help="final time")
    p.add_argument("--init", choices=["ritz", "interpolation"])
    p.add_argument("--tol", type=float, help="BiCGStab relative tolerance")
    p.add_argument("--paper-scale", action="store_const", const=True, default=None)
    p.add_argument("--out-dir")
    p.add_argument("--stride", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--check", action="store_true", help="exit 3 if the acceptance threshold is missed")


def build_parser():
    parser = _Parser(prog="nlswave", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pm = sub.add_parser("mesh", help="generate or inspect meshes")
    msub = pm.add_subparsers(dest="mesh_command", required=True, parser_class=_Parser)
    g = msub.add_parser("gen")
    g.add_argument("--shape", choices=["square", "disk"], default="square")
    g.add_argument("--n", type=int, default=8, help="grid resolution (square)")
    g.add_argument("--level", type=int, default=0, help="refinement level (disk)")
    g.add_argument("--radius", type=float, default=0.5)
    g.add_argument("--center", type=_fraction_list, default=[0.5, 0.5])
    g.add_argument("-o", "--output", required=True)
    i = msub.add_parser("info")
    i.add_argument("path")

    pr = sub.add_parser("run", help="single (h, tau) simulation")
    _add_study_flags(pr)
    pr.add_argument("--snapshot", help="write final dof values as CSV")

    pc = sub.add_parser("converge", help="spatial or temporal convergence study")
    _add_study_flags(pc)
    pc.add_argument("--study", choices=["space", "time"], required=True)
    pc.add_argument("--tau-coef", type=float, help="c in tau = c*h^((r+1)/2); probed when omitted")

    ps = sub.add_parser("stability", help="fixed-tau error vs h")
    _add_study_flags(ps)

    pe = sub.add_parser("energy", help="discrete energy trace")
    _add_study_flags(pe)
    return parser


def _config(args, study):
    overrides = {
        "problem": args.problem,
        "degree": args.degree,
        "study": study,
        "levels": args.levels,
        "taus": args.taus,
        "T": args.T,
        "init": args.init,
        "tol": args.tol,
        "paper_scale": args.paper_scale,
        "out_dir": args.out_dir,
        "stride": args.stride,
        "threads": args.threads,
        "tau_coef": getattr(args, "tau_coef", None),
    }
    return load_config(args.config, overrides)


def _mesh_cmd(args):
    if args.mesh_command == "gen":
        if args.shape == "square":
            m = meshmod.unit_square_mesh(args.n)
        else:
            m = meshmod.disk_mesh(tuple(args.center), args.radius, args.level)
        meshmod.write_mesh(m, args.output)
        print(f"wrote {args.output}: {m.nv} vertices, {m.nt} triangles")
        return EXIT_OK
    m = meshmod.read_mesh(args.path)
    info = {
        "shape": repr(m.shape),
        "vertices": m.nv,
        "triangles": m.nt,
        "edges": len(m.edges),
        "boundary_vertices": int(m.boundary.sum()),
        "h": m.h,
        "area": m.area(),
        "min_angle_deg": m.min_angle(),
        "quality_ratio": m.quality_ratio(),
    }
    print(json.dumps(info, indent=2))
    return EXIT_OK


def _report(ok, msg, check):
    print(("PASS " if ok else "FAIL ") + msg)
    return EXIT_CHECK if (check and not ok) else EXIT_OK


def _tag(cfg):
    return f"{cfg.problem}_P{cfg.degree}"


def _run_cmd(args):
    cfg = _config(args, "single")
    summary, result, scheme = studies.single_run(cfg)
    if args.snapshot:
        space = scheme.space
        U = result.state.U_curr
        path = Path(args.snapshot)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            fh.write("dof,x,y,boundary,re,im\n")
            for k, ((x, y), b, u) in enumerate(zip(space.dof_coords.tolist(), space.is_boundary.tolist(), U.tolist())):
                fh.write(f"{k},{x!r},{y!r},{int(b)},{u.real!r},{u.imag!r}\n")
    print(json.dumps(summary, indent=2))
    if args.check and summary["energy_drift"] is not None:
        return _report(summary["energy_drift"] <= 1e-10, f"energy drift {summary['energy_drift']:.3e}", True)
    return EXIT_OK


def _converge_cmd(args):
    cfg = _config(args, args.study)
    out = Path(cfg.out_dir)
    if args.study == "space":
        rows = studies.converge_space(cfg)
        window = studies.expected_space_order(cfg.problem, cfg.degree)
        xkey = "h"
    else:
        rows = studies.converge_time(cfg)
        window = (1.8, 2.2)
        xkey = "tau"
    stem = f"converge_{args.study}_{_tag(cfg)}"
    studies.write_convergence_csv(out / f"{stem}.csv", rows)
    studies.plot_convergence(out / f"{stem}.svg", rows, xkey, f"{cfg.problem} P{cfg.degree}, {args.study}")
    for r in rows:
        order = "" if r.order is None else f"{r.order:.3f}"
        print(f"level={r.level:<4d} h={r.h:.5g} tau={r.tau:.5g} dofs={r.dofs:<7d} "
              f"err={r.l2_error:.4e} order={order} wall={r.wall_time:.2f}s")
    ok, msg = studies.check_convergence(rows, window)
    return _report(ok, msg, args.check)


def _stability_cmd(args):
    cfg = _config(args, "stability")
    out = Path(cfg.out_dir)
    rows = studies.stability(cfg)
    stem = f"stability_{_tag(cfg)}"
    studies.write_stability_csv(out / f"{stem}.csv", rows)
    studies.plot_stability(out / f"{stem}.svg", rows, f"{cfg.problem} P{cfg.degree}, fixed tau")
    for r in rows:
        print(f"tau={r.tau:<6g} level={r.level:<4d} err={r.l2_error:.4e}" + (" plateau" if r.plateau else ""))
    ok, msg = studies.check_stability(rows)
    return _report(ok, msg, args.check)


def _energy_cmd(args):
    cfg = _config(args, "energy")
    out = Path(cfg.out_dir)
    rows = studies.energy_trace(cfg)
    stem = f"energy_{_tag(cfg)}"
    studies.write_energy_csv(out / f"{stem}.csv", rows)
    studies.plot_energy(out / f"{stem}.svg", rows, f"{cfg.problem} P{cfg.degree}, discrete energy")
    ok, msg = studies.check_energy(rows)
    print(f"E0={rows[0].total!r} steps={rows[-1].n} " + msg)
    return _report(ok, msg, args.check)


COMMANDS = {
    "mesh": _mesh_cmd,
    "run": _run_cmd,
    "converge": _converge_cmd,
    "stability": _stability_cmd,
    "energy": _energy_cmd,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"nlswave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except StudyError as exc:
        print(f"nlswave: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"nlswave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
