"""Reproduction tables: experiment matrices, reference values and reports.

Every table is a list of independent cells.  A cell runs one measurement
(operator complexity, GMRES iterations, minimal converging shift, LFA factor
or stationary convergence factor) and is compared with a reference value when
one is known.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..grid import unit_grid, write_raster
from ..helmholtz import apply_shift
from ..krylov import convergence_factor
from ..lfa import TwoGridConfig, sigma_for_ppw, twogrid_factor
from ..multigrid import build_hierarchy, coarse_operators, cycle_spectral_radius, mg_solve
from ..intergrid import operator_complexity
from .experiment import ExperimentConfig, build_problem, run_experiment
from .models import layered_model

TABLES = ("t31", "t52", "t53", "t54", "t55", "fig53", "fig51")
SCALES = ("desk", "full")

CSV_FIELDS = (
    "table", "case", "metric", "value", "reference", "tolerance", "passed",
    "model", "dim", "cells", "levels", "cycle", "smoother", "scheme", "alpha",
    "damping", "converged", "wall_time",
)

# V-cycle dampings (fine level first) from a greedy level-by-level iteration
# search at 256^2, alpha = 0.15 (``helmvanka tune``); the W-cycle defaults
# diverge inside a deep V-cycle.  No jacobi damping converges below the
# third level, so its tail is the smallest value scanned
V_CYCLE_DAMPING = {
    "rb": [0.83, 0.6, 0.3, 0.5, 0.2, 0.8],
    "jacobi": [0.89, 0.75, 0.55, 0.1, 0.1, 0.1],
}

# slowness-squared layers (top first) of the synthetic 3D layered raster;
# the values follow 1/v^2 for velocities between 2.2 and 6 km/s, scaled to max 1
LAYERED_VELOCITIES = (2.2, 2.6, 3.1, 3.6, 4.2, 4.8, 5.4, 6.0)


@dataclass
class Cell:
    table: str
    case: str
    kind: str
    config: dict
    reference: float | None = None
    tolerance: float | None = None
    params: dict = field(default_factory=dict)


def _size_tol(n: int) -> float:
    return {128: 3, 256: 5, 512: 8}.get(n, 15)


def _t31(scale):
    ref = {
        "cubic": (1.789, 2.030, 2.056, 2.058),
        "level_dependent": (1.789, 1.886, 1.898, 1.899),
        "linear": (1.179, 1.202, 1.202, 1.206),
    }
    cells = []
    for scheme, vals in ref.items():
        for levels, r in zip((2, 3, 4, 5), vals):
            cfg = ExperimentConfig(dim=3, cells=(64, 64, 64), levels=levels, scheme=scheme, alpha=0.0)
            cells.append(Cell("t31", f"{scheme} {levels}-level", "complexity", cfg.to_dict(), r, 0.01))
    return cells


_T52_REF = {
    "jacobi": {"cubic": (34, 58, 99), "mixed": (30, 53, 96), "level_dependent": (29, 49, 88)},
    "element": {"cubic": (24, 44, 80), "mixed": (24, 41, 76), "level_dependent": (25, 44, 79)},
    "plus": {"cubic": (26, 45, 79), "mixed": (25, 50, 90), "level_dependent": (27, 46, 81)},
    "rb": {"cubic": (20, 36, 64), "mixed": (26, 48, 90), "level_dependent": (20, 36, 63)},
}
_T52_ALPHA = {"jacobi": 0.3, "element": 0.25, "plus": 0.25, "rb": 0.18}


def _t52(scale):
    sizes = (128, 256) if scale == "desk" else (128, 256, 512)
    cells = []
    for smoother, by_scheme in _T52_REF.items():
        for scheme, refs in by_scheme.items():
            for n, r in zip((128, 256, 512), refs):
                if n not in sizes:
                    continue
                cfg = ExperimentConfig(cells=(n, n), levels=4, cycle="W", smoother=smoother, scheme=scheme,
                                       alpha=_T52_ALPHA[smoother])
                cells.append(Cell("t52", f"{smoother} {scheme} {n}^2", "solve", cfg.to_dict(), r, _size_tol(n)))
    return cells


def _t53(scale):
    sizes = (128, 256) if scale == "desk" else (128, 256, 512, 1024)
    ref = {
        "linear": {(2, 0.0): (6, 6, 6, 6), (3, 0.1): (11, 17, 30, 59), (4, 0.25): (20, 37, 69, 134)},
        "wedge": {(2, 0.0): (6, 6, 7, 7), (3, 0.1): (22, 32, 52, 92), (4, 0.15): (23, 37, 67, 131)},
    }
    cells = []
    for model, runs in ref.items():
        for (levels, alpha), refs in runs.items():
            for n, r in zip((128, 256, 512, 1024), refs):
                if n not in sizes:
                    continue
                cfg = ExperimentConfig(model=model, cells=(n, n), levels=levels, cycle="W", smoother="rb",
                                       scheme="level_dependent", alpha=alpha)
                tol = 2 if levels == 2 else _size_tol(n)
                cells.append(Cell("t53", f"{model} {levels}-level {n}^2", "solve", cfg.to_dict(), r, tol))
    return cells


def _t54(scale):
    sizes = (48,) if scale == "desk" else (48, 64, 96, 128)
    ref = {"jacobi": (0.5, (15, 19, 27, 38)), "element": (0.4, (13, 16, 28, 38)), "plus": (0.65, (19, 24, 35, 46))}
    tol = {"jacobi": 3, "element": 3, "plus": 4}
    cells = []
    for smoother, (alpha, refs) in ref.items():
        for n, r in zip((48, 64, 96, 128), refs):
            if n not in sizes:
                continue
            cfg = ExperimentConfig(dim=3, cells=(n, n, n), levels=4, cycle="W", smoother=smoother,
                                   scheme="level_dependent", alpha=alpha)
            cells.append(Cell("t54", f"{smoother} {n}^3", "solve", cfg.to_dict(), r,
                              tol[smoother] if n == 48 else max(4, 0.15 * r)))
    return cells


def layered_raster(path, cells=(128, 128, 56)) -> Path:
    """Write the synthetic layered 3D raster used in place of a field model."""
    grid = unit_grid(len(cells), cells)
    v = np.asarray(LAYERED_VELOCITIES)
    k2 = (v.min() / v) ** 2
    path = Path(path)
    write_raster(path, layered_model(grid, k2))
    return path


def _t55(scale, workdir):
    sizes = ((128, 128, 56),) if scale == "desk" else ((128, 128, 56), (192, 192, 72), (256, 256, 96))
    ref = {(128, 128, 56): (10, 15, 13, 25), (192, 192, 72): (13, 21, 16, 41), (256, 256, 96): (16, 30, 22, 76)}
    cells = []
    for n in sizes:
        path = layered_raster(Path(workdir) / f"layered_{'x'.join(map(str, n))}.txt", n)
        variants = (
            ("element", "level_dependent", 3, 0.2),
            ("element", "level_dependent", 4, 0.4),
            ("jacobi", "linear", 3, 0.2),
            ("jacobi", "linear", 4, 0.4),
        )
        for (smoother, scheme, levels, alpha), r in zip(variants, ref[n]):
            if scale == "desk" and levels == 4:
                continue
            cfg = ExperimentConfig(model=str(path), dim=3, cells=n, levels=levels, cycle="V", smoother=smoother,
                                   scheme=scheme, alpha=alpha)
            # reference counts belong to a field model; they are reported, not asserted
            cells.append(Cell("t55", f"{smoother} {scheme} {levels}-level {'x'.join(map(str, n))}", "solve",
                              cfg.to_dict(), r, None))
    return cells


def _fig53(scale):
    n = 256
    cells = []
    for smoother in ("rb", "jacobi"):
        for levels in (3, 4, 5, 6, 7):
            cfg = ExperimentConfig(cells=(n, n), levels=levels, cycle="V", smoother=smoother,
                                   damping=V_CYCLE_DAMPING[smoother], alpha=0.15)
            ref = 0.15 if smoother == "rb" else None
            cells.append(Cell("fig53", f"{smoother} {levels}-level", "shift", cfg.to_dict(), ref, 0.0))
            if levels >= 4:
                cells.append(Cell("fig53", f"{smoother} {levels}-level", "solve", cfg.to_dict(), None, None))
    return cells


def _fig51(scale):
    n = 256
    best = {"element": 0.97, "plus": 0.87, "rb": 0.83}
    step = 0.05 if scale == "desk" else 0.02
    cells = []
    for kind, w_ref in best.items():
        grid = np.round(np.arange(w_ref - 0.2, w_ref + 0.2 + 1e-9, 0.01), 4)
        cells.append(Cell("fig51", f"{kind} optimum", "lfa_opt", {"smoother": kind}, w_ref, 0.05,
                          {"w_grid": grid.tolist(), "n": n}))
        for w in np.round(np.arange(w_ref - 0.15, w_ref + 0.15 + 1e-9, step), 4):
            cfg = ExperimentConfig(cells=(n, n), levels=2, cycle="V", smoother=kind, scheme="cubic", alpha=0.0,
                                   damping=[float(w)], tol=1e-9, maxiter=200)
            cells.append(Cell("fig51", f"{kind} w={w:.2f}", "cf", cfg.to_dict(), None, None, {"w": float(w)}))
    return cells


def table_cells(name: str, scale: str = "desk", workdir=".") -> list:
    if name not in TABLES:
        raise ValueError(f"unknown table {name!r}; expected one of {TABLES}")
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}; expected one of {SCALES}")
    if name == "t55":
        return _t55(scale, workdir)
    return {"t31": _t31, "t52": _t52, "t53": _t53, "t54": _t54, "fig53": _fig53, "fig51": _fig51}[name](scale)


# -- measurements ---------------------------------------------------------------


def minimal_shift(cfg: ExperimentConfig, hi: float = 4.0, tol: float = 0.01) -> float:
    """Smallest shift (to ``tol``) whose cycle contracts, by bisection; inf if none up to ``hi``."""
    prob = build_problem(cfg)

    def converges(alpha):
        hier = build_hierarchy(prob.H, prob.M, cfg.replace(alpha=alpha).mg_config(), prob.omega)
        return cycle_spectral_radius(hier, iterations=30) < 1.0

    if not converges(hi):
        return math.inf
    lo = 0.0
    if converges(lo):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            hi = mid
        else:
            lo = mid
    return round(hi, 4)


def stationary_factor(cfg: ExperimentConfig) -> tuple:
    """Convergence factor of the multigrid cycle used as a solver for the unshifted problem."""
    prob = build_problem(cfg)
    hier = build_hierarchy(prob.H, prob.M, cfg.mg_config(), prob.omega)
    A = apply_shift(prob.H, prob.M, cfg.alpha, prob.omega)
    _, hist = mg_solve(hier, prob.q, tol=cfg.tol, maxiter=cfg.maxiter, A=A)
    ok = hist[-1] < cfg.tol
    return convergence_factor(hist), ok


def lfa_optimum(kind: str, w_grid, n: int) -> float:
    h = 1.0 / n
    sigma = sigma_for_ppw(h)
    rows = [(w, twogrid_factor(TwoGridConfig(kind=kind, w=w, h=h, sigma=sigma))) for w in w_grid]
    return min(rows, key=lambda r: (r[1], r[0]))


def run_cell(cell: Cell) -> dict:
    t0 = time.perf_counter()
    row = {"table": cell.table, "case": cell.case, "reference": cell.reference, "tolerance": cell.tolerance}
    converged = ""
    if cell.kind == "lfa_opt":
        w, rho = lfa_optimum(cell.config["smoother"], cell.params["w_grid"], cell.params["n"])
        row.update(metric="lfa_optimal_w", value=w, smoother=cell.config["smoother"], rho_loc=rho)
    else:
        cfg = ExperimentConfig.from_dict(cell.config)
        row.update(model=cfg.model, dim=cfg.dim, cells="x".join(map(str, cfg.cells)), levels=cfg.levels,
                   cycle=cfg.cycle, smoother=cfg.smoother, scheme=cfg.scheme, alpha=cfg.alpha,
                   damping=" ".join(f"{w:g}" for w in cfg.damping) if cfg.damping else "")
        if cell.kind == "complexity":
            prob = build_problem(cfg)
            ops = coarse_operators(apply_shift(prob.H, prob.M, cfg.alpha, prob.omega), cfg.scheme, cfg.levels)
            row.update(metric="operator_complexity", value=round(operator_complexity(ops), 4))
        elif cell.kind == "solve":
            rec = run_experiment(cfg)
            converged = rec.converged
            row.update(metric="iterations", value=rec.iterations)
        elif cell.kind == "shift":
            row.update(metric="minimal_alpha", value=minimal_shift(cfg))
        elif cell.kind == "cf":
            cf, ok = stationary_factor(cfg)
            converged = ok
            row.update(metric="c_f", value=round(cf, 4))
        else:
            raise ValueError(f"unknown cell kind {cell.kind!r}")
    row["converged"] = converged
    row["passed"] = _passed(cell, row["value"], converged)
    row["wall_time"] = round(time.perf_counter() - t0, 3)
    return row


def _passed(cell: Cell, value, converged) -> str:
    if cell.reference is None:
        return ""
    if converged is False:
        return "fail"
    if cell.kind == "shift":
        ok = value <= cell.reference + cell.tolerance
    else:
        ok = abs(value - cell.reference) <= cell.tolerance + 1e-12
    return "pass" if ok else "fail"


def _fig51_checks(rows: list) -> list:
    """Compare measured c_f at the LFA optimum with rho_loc for each patch."""
    extra = []
    for opt in [r for r in rows if r["metric"] == "lfa_optimal_w"]:
        kind = opt["smoother"]
        cfs = [r for r in rows if r["metric"] == "c_f" and r.get("smoother") == kind]
        if not cfs:
            continue
        near = min(cfs, key=lambda r: abs(float(r["damping"]) - opt["value"]))
        extra.append({
            "table": "fig51", "case": f"{kind} c_f at w={near['damping']}", "metric": "c_f_minus_rho_loc",
            "value": round(near["value"] - opt["rho_loc"], 4), "reference": 0.0, "tolerance": 0.05,
            "passed": "pass" if abs(near["value"] - opt["rho_loc"]) <= 0.05 else "fail",
            "smoother": kind, "converged": near["converged"], "wall_time": 0.0,
        })
    return extra


def run_table(name: str, scale: str = "desk", outdir=".", jobs: int = 1, progress=None) -> list:
    """Run a table, write ``<name>.csv`` and ``<name>.txt`` into ``outdir`` and return the rows."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cells = table_cells(name, scale, outdir)
    rows = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for row in pool.map(run_cell, cells):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for cell in cells:
            row = run_cell(cell)
            rows.append(row)
            if progress:
                progress(row)
    if name == "fig51":
        rows += _fig51_checks(rows)
    write_csv(outdir / f"{name}.csv", rows)
    (outdir / f"{name}.txt").write_text(format_rows(rows))
    return rows


def write_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k, "")) for k in CSV_FIELDS})


def format_rows(rows) -> str:
    cols = ("case", "metric", "value", "reference", "tolerance", "passed", "wall_time")
    table = [[("" if r.get(c) is None else str(r.get(c, ""))) for c in cols] for r in rows]
    widths = [max(len(c), *(len(t[i]) for t in table)) if table else len(c) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(t, widths)) for t in table]
    return "\n".join(lines) + "\n"


def all_passed(rows) -> bool:
    return not any(r.get("passed") == "fail" for r in rows)
