"""Experiment configuration, single solves and damping search."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..grid import SlownessModel, absorbing_layer, point_source_rhs, ppw_frequency, unit_grid
from ..helmholtz import assemble_helmholtz
from ..krylov import fgmres
from ..multigrid import MgConfig, build_hierarchy
from .models import MODEL_KINDS, gen_model, load_raster, resample


@dataclass
class ExperimentConfig:
    """One solve of the benchmark protocol.

    ``model`` is one of the synthetic kinds or a path to a raster file.  When
    ``cells`` is empty a raster's own grid is used; otherwise the raster is
    resampled onto ``cells``.
    """

    model: str = "homogeneous"
    dim: int = 2
    cells: tuple = (128, 128)
    ppw: float = 10.0
    levels: int = 4
    cycle: str = "W"
    nu1: int = 1
    nu2: int = 1
    smoother: str = "rb"
    scheme: str = "level_dependent"
    alpha: float = 0.18
    restart: int = 5
    tol: float = 1e-6
    maxiter: int = 300
    damping: list | None = None
    abc_width: int = 20
    abc_strength: float = 1.0
    extend_depth: int = 0

    def __post_init__(self):
        self.cells = tuple(int(c) for c in self.cells)
        if self.damping is not None:
            self.damping = [float(w) for w in self.damping]
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.cells and len(self.cells) != self.dim:
            raise ValueError(f"cells {self.cells} do not match dim={self.dim}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["cells"] = list(self.cells)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def mg_config(self) -> MgConfig:
        return MgConfig(self.levels, self.cycle, self.nu1, self.nu2, self.scheme, self.smoother,
                        self.alpha, self.damping)


@dataclass
class RunRecord:
    config: dict
    iterations: int
    converged: bool
    c_f: float
    operator_complexity: float
    stencil_radii: list
    residual_history: list = field(repr=False)
    wall_time: float
    setup_time: float
    omega: float
    final_residual: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class Problem:
    model: SlownessModel
    omega: float
    H: object
    M: object
    q: np.ndarray


def build_model(cfg: ExperimentConfig) -> SlownessModel:
    if cfg.model in MODEL_KINDS:
        if not cfg.cells:
            raise ValueError("synthetic models need explicit cell counts")
        return gen_model(cfg.model, unit_grid(cfg.dim, cfg.cells))
    path = Path(cfg.model)
    if not path.exists():
        raise ValueError(f"model {cfg.model!r} is neither one of {MODEL_KINDS} nor an existing raster file")
    model = load_raster(path, cfg.extend_depth)
    if model.grid.dim != cfg.dim:
        raise ValueError(f"raster is {model.grid.dim}D but dim={cfg.dim}")
    if cfg.cells and cfg.cells != model.grid.cells:
        model = resample(model, cfg.cells)
    return model


def build_problem(cfg: ExperimentConfig) -> Problem:
    """Model, frequency, absorbing layer, operators and point source."""
    model = build_model(cfg)
    grid = model.grid
    omega = ppw_frequency(grid, model, cfg.ppw)
    att = absorbing_layer(grid, cfg.abc_width, cfg.abc_strength) if cfg.abc_width > 0 else None
    H, M = assemble_helmholtz(grid, model, omega, att)
    return Problem(model, omega, H, M, point_source_rhs(grid))


def _solve(cfg: ExperimentConfig, prob: Problem, hier):
    return fgmres(prob.H, hier.precondition, prob.q, cfg.restart, cfg.tol, cfg.maxiter)


def run_experiment(cfg: ExperimentConfig) -> RunRecord:
    """Assemble, build the hierarchy and solve with preconditioned FGMRES."""
    prob = build_problem(cfg)
    t0 = time.perf_counter()
    hier = build_hierarchy(prob.H, prob.M, cfg.mg_config(), prob.omega)
    setup = time.perf_counter() - t0
    _, rep = _solve(cfg, prob, hier)
    return RunRecord(
        config=cfg.to_dict(),
        iterations=rep.iterations,
        converged=rep.converged,
        c_f=float(rep.c_f),
        operator_complexity=hier.operator_complexity(),
        stencil_radii=hier.stencil_radii(),
        residual_history=[float(r) for r in rep.residual_history],
        wall_time=rep.wall_time,
        setup_time=setup,
        omega=prob.omega,
        final_residual=rep.final_residual,
    )


def damping_scan(cfg: ExperimentConfig, level: int, w_grid) -> list:
    """Iteration count for every damping in ``w_grid`` on ``level`` (1 = finest).

    Dampings of the other levels come from ``cfg``.  The hierarchy gets at
    least ``level + 1`` levels so that ``level`` is smoothed rather than
    solved directly.
    """
    w_grid = [float(w) for w in w_grid]
    if not w_grid:
        raise ValueError("empty damping grid")
    if level < 1:
        raise ValueError("levels are numbered from 1")
    if cfg.levels < level:
        raise ValueError(f"level {level} exceeds the {cfg.levels}-level configuration")
    cfg = cfg.replace(levels=max(cfg.levels, level + 1))
    prob = build_problem(cfg)
    hier = build_hierarchy(prob.H, prob.M, cfg.mg_config(), prob.omega)
    if hier.depth <= level:
        raise ValueError(f"grid {cfg.cells} is too coarse to smooth on level {level}")
    base = hier.levels[level - 1].smoother
    rows = []
    for w in w_grid:
        hier.levels[level - 1].smoother = base.with_damping(w)
        _, rep = _solve(cfg, prob, hier)
        rows.append((w, rep.iterations if rep.converged else None))
    hier.levels[level - 1].smoother = base
    return rows


def _row_key(row):
    w, it = row
    return (it is None, it if it is not None else 0, w)


def tune_damping(cfg: ExperimentConfig, level: int, w_grid) -> float:
    """Damping on ``level`` minimizing the iteration count; ties go to the smaller value."""
    return min(damping_scan(cfg, level, w_grid), key=_row_key)[0]


def tune_levels(cfg: ExperimentConfig, w_grid, first: int = 2, last: int | None = None) -> list:
    """Greedy level-by-level search, fine to coarse, as a full damping list."""
    last = cfg.levels - 1 if last is None else last
    damping = list(cfg.mg_config().damping_for(cfg.dim))
    for level in range(first, last + 1):
        while len(damping) < level:
            damping.append(damping[-1])
        w = tune_damping(cfg.replace(damping=damping, levels=max(cfg.levels, level + 1)), level, w_grid)
        damping[level - 1] = w
    return damping
