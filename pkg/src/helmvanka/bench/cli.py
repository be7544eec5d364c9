"""Command-line entry point: ``helmvanka {solve,table,lfa,tune}``.

Exit codes: 0 on success, 1 on errors, 2 when a table run misses one of its
reference values.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from .. import kernels
from ..lfa import TwoGridConfig, optimal_damping, sigma_for_ppw, smoothing_factor, twogrid_factor
from ..multigrid import CYCLES
from ..smoothers import PATCH_KINDS
from ..intergrid import SCHEMES
from .experiment import ExperimentConfig, damping_scan, run_experiment
from .tables import SCALES, TABLES, all_passed, format_rows, run_table

log = logging.getLogger("helmvanka")

EXIT_OK, EXIT_ERROR, EXIT_MISMATCH = 0, 1, 2


def _float_list(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from exc


def _int_list(text):
    try:
        return [int(v) for v in text.replace(",", " ").replace("x", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from exc


def _grid(text):
    """Parse ``start:step:stop`` (inclusive) or a list of values."""
    if text.count(":") == 2:
        a, s, b = (float(v) for v in text.split(":"))
        if s <= 0:
            raise argparse.ArgumentTypeError("step must be positive")
        return [round(v, 10) for v in np.arange(a, b + s / 2, s)]
    return _float_list(text)


def _add_config_flags(p):
    d = ExperimentConfig()
    p.add_argument("--model", default=d.model, help="homogeneous, linear, wedge or a raster file path")
    p.add_argument("--dim", type=int, default=d.dim, choices=(2, 3))
    p.add_argument("--cells", type=_int_list, nargs="+", default=None,
                   help="cells per axis, e.g. '128 128' or 128x128 (default: 128 per axis, raster's own grid)")
    p.add_argument("--ppw", type=float, default=d.ppw)
    p.add_argument("--levels", type=int, default=d.levels)
    p.add_argument("--cycle", choices=CYCLES, default=d.cycle)
    p.add_argument("--nu1", type=int, default=d.nu1)
    p.add_argument("--nu2", type=int, default=d.nu2)
    p.add_argument("--smoother", choices=PATCH_KINDS, default=d.smoother)
    p.add_argument("--scheme", choices=SCHEMES, default=d.scheme)
    p.add_argument("--alpha", type=float, default=d.alpha)
    p.add_argument("--restart", type=int, default=d.restart)
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("--maxiter", type=int, default=d.maxiter)
    p.add_argument("--damping", type=_float_list, default=None, help="per-level damping, fine level first; missing levels keep their defaults")
    p.add_argument("--abc-width", type=int, default=d.abc_width)
    p.add_argument("--abc-strength", type=float, default=d.abc_strength, help="gamma/omega at the boundary")
    p.add_argument("--extend-depth", type=int, default=d.extend_depth, help="rows/planes appended to a raster")


def config_from_args(args) -> ExperimentConfig:
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    kw = {k: v for k, v in vars(args).items() if k in names}
    if kw.get("cells") is not None:
        kw["cells"] = tuple(c for part in kw["cells"] for c in part)
    else:
        kw["cells"] = (128,) * args.dim if kw["model"] in ("homogeneous", "linear", "wedge") else ()
    return ExperimentConfig(**kw)


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the generic error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="helmvanka", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one preconditioned GMRES solve")
    _add_config_flags(p)
    p.add_argument("--json", dest="json_out", default=None, help="write the full run record to this file")

    p = sub.add_parser("table", help="reproduce a table or figure")
    p.add_argument("name", choices=TABLES)
    p.add_argument("--scale", choices=SCALES, default="desk")
    p.add_argument("--out", default="results")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("lfa", help="LFA damping sweep for a patch")
    p.add_argument("--smoother", choices=("jacobi", "element", "plus", "rb"), default="rb")
    p.add_argument("--mode", choices=("twogrid", "smoothing"), default="twogrid")
    p.add_argument("--w-grid", type=_grid, default=_grid("0.5:0.01:1.2"))
    p.add_argument("--cells", type=int, default=256, help="cells per axis defining h")
    p.add_argument("--ppw", type=float, default=10.0)
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--restriction", choices=("linear", "cubic"), default="cubic")
    p.add_argument("--prolongation", choices=("linear", "cubic"), default="cubic")
    p.add_argument("--nu1", type=int, default=1)
    p.add_argument("--nu2", type=int, default=1)
    p.add_argument("--csv", default=None, help="write the sweep to this file")

    p = sub.add_parser("tune", help="exhaustive damping search on one level")
    _add_config_flags(p)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--w-grid", type=_grid, default=_grid("0.1:0.05:1.0"))
    return parser


def cmd_solve(args) -> int:
    cfg = config_from_args(args)
    rec = run_experiment(cfg)
    print(f"backend           {kernels.BACKEND}")
    print(f"omega             {rec.omega:.6g}")
    print(f"iterations        {rec.iterations}")
    print(f"converged         {rec.converged}")
    print(f"final residual    {rec.final_residual:.3e}")
    print(f"c_f               {rec.c_f:.4f}")
    print(f"op complexity     {rec.operator_complexity:.4f}")
    print(f"stencil radii     {rec.stencil_radii}")
    print(f"setup / solve [s] {rec.setup_time:.2f} / {rec.wall_time:.2f}")
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(rec.to_dict(), fh, indent=1)
    return EXIT_OK if rec.converged else EXIT_ERROR


def cmd_table(args) -> int:
    def progress(row):
        log.info("%s %s: %s = %s", row["table"], row["case"], row["metric"], row["value"])

    rows = run_table(args.name, args.scale, args.out, args.jobs, progress)
    print(format_rows(rows), end="")
    return EXIT_OK if all_passed(rows) else EXIT_MISMATCH


def cmd_lfa(args) -> int:
    h = 1.0 / args.cells
    sigma = sigma_for_ppw(h, args.ppw)
    rows = []
    for w in args.w_grid:
        if args.mode == "smoothing":
            f = smoothing_factor(args.smoother, w, h, sigma, args.resolution)
        else:
            f = twogrid_factor(TwoGridConfig(kind=args.smoother, w=w, nu1=args.nu1, nu2=args.nu2,
                                             restriction=args.restriction, prolongation=args.prolongation,
                                             h=h, sigma=sigma, resolution=args.resolution))
        rows.append((w, f))
    lines = ["w,factor"] + [f"{w:.4f},{f:.6f}" for w, f in rows]
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    w, f = optimal_damping(rows)
    print(f"# optimum w={w:.4f} factor={f:.6f}")
    return EXIT_OK


def cmd_tune(args) -> int:
    cfg = config_from_args(args)
    rows = damping_scan(cfg, args.level, args.w_grid)
    print("w,iterations")
    for w, it in rows:
        print(f"{w:.4f},{'' if it is None else it}")
    ok = [(w, it) for w, it in rows if it is not None]
    if not ok:
        print("# no damping converged", file=sys.stderr)
        return EXIT_ERROR
    w, it = min(ok, key=lambda r: (r[1], r[0]))
    print(f"# best w={w:.4f} iterations={it}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handler = {"solve": cmd_solve, "table": cmd_table, "lfa": cmd_lfa, "tune": cmd_tune}[args.command]
    try:
        return handler(args)
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"helmvanka: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
