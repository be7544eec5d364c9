"""Synthetic slowness models and raster loading for the experiments.

The vertical axis is the last grid axis (y in 2D, z in 3D), which is array
axis 0 with index 0 at the top of the domain.
"""

from __future__ import annotations

import numpy as np

from ..grid import GridSpec, SlownessModel, build_grid, read_raster, unit_grid

MODEL_KINDS = ("homogeneous", "linear", "wedge")

# slowness squared of the slow (top) and fast (bottom) media
KAPPA_SQ_TOP = 0.25
KAPPA_SQ_BOTTOM = 1.0
# wedge interface: depth fraction at the left and right edges
WEDGE_LEFT, WEDGE_RIGHT = 0.4, 0.7


def _depth(grid: GridSpec) -> np.ndarray:
    """Depth fraction in [0, 1] of every node, broadcast to the grid shape."""
    nz = grid.shape[0]
    d = np.arange(nz) / (nz - 1)
    return np.broadcast_to(d.reshape((nz,) + (1,) * (grid.dim - 1)), grid.shape)


def _xfrac(grid: GridSpec) -> np.ndarray:
    nx = grid.shape[-1]
    x = np.arange(nx) / (nx - 1)
    return np.broadcast_to(x, grid.shape)


def gen_model(kind: str, grid: GridSpec) -> SlownessModel:
    """Synthetic model of the given kind.

    ``linear`` ramps kappa^2 from 0.25 at the top to 1 at the bottom.
    ``wedge`` puts 0.25 above and 1 below a straight interface running from
    40% depth on the left edge to 70% depth on the right edge; in 3D the
    interface is extruded along y.
    """
    if kind == "homogeneous":
        return SlownessModel(grid, np.ones(grid.shape))
    depth = _depth(grid)
    if kind == "linear":
        k2 = KAPPA_SQ_TOP + (KAPPA_SQ_BOTTOM - KAPPA_SQ_TOP) * depth
        return SlownessModel(grid, np.array(k2))
    if kind == "wedge":
        line = WEDGE_LEFT + (WEDGE_RIGHT - WEDGE_LEFT) * _xfrac(grid)
        k2 = np.where(depth < line, KAPPA_SQ_TOP, KAPPA_SQ_BOTTOM)
        return SlownessModel(grid, k2.astype(float))
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS} or a raster path")


def layered_model(grid: GridSpec, values) -> SlownessModel:
    """Horizontal layers of equal thickness with the given kappa^2 values (top first)."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0 or np.any(values <= 0):
        raise ValueError("layer values must be a non-empty list of positive numbers")
    idx = np.minimum((_depth(grid) * values.size).astype(int), values.size - 1)
    return SlownessModel(grid, values[idx])


def extend_depth(model: SlownessModel, k: int) -> SlownessModel:
    """Append ``k`` bottom rows (2D) or planes (3D) copying the last one."""
    if k < 0:
        raise ValueError("extension must be non-negative")
    if k == 0:
        return model
    g = model.grid
    cells = list(g.cells)
    cells[-1] += k
    h = g.spacing()
    grid = build_grid(g.dim, cells, [c * h for c in cells])
    last = model.kappa_sq[-1:]
    values = np.concatenate([model.kappa_sq, np.repeat(last, k, axis=0)], axis=0)
    return SlownessModel(grid, values)


def load_raster(path, extend: int = 0) -> SlownessModel:
    """Read a raster model file, optionally extended in depth."""
    return extend_depth(read_raster(path), extend)


def resample(model: SlownessModel, cells) -> SlownessModel:
    """Nearest-node resampling of a model onto a unit grid with new cell counts."""
    grid = unit_grid(model.grid.dim, cells)
    idx = []
    for n_new, n_old in zip(grid.shape, model.grid.shape):
        t = np.linspace(0.0, 1.0, n_new)
        idx.append(np.rint(t * (n_old - 1)).astype(int))
    return SlownessModel(grid, model.kappa_sq[np.ix_(*idx)])
