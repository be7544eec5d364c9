"""Regular nodal grids, slowness and attenuation models, sources.

Node ordering is row-major with x fastest, then y, then z.  Fields are stored
as numpy arrays of shape :attr:`GridSpec.shape`, i.e. ``(ny, nx)`` in 2D and
``(nz, ny, nx)`` in 3D, so that ``field.ravel()`` yields the linear ordering.
Everything that refers to an array axis (stencil offsets, patch offsets) uses
this array-axis order.  The vertical (depth) axis is the last spatial axis,
which is array axis 0; index 0 is the top of the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a regular nodal grid.

    Parameters
    ----------
    dim : int
        Spatial dimension, 2 or 3.
    cells : tuple of int
        Cells per spatial axis, ordered (x, y[, z]).
    lengths : tuple of float
        Physical extent per spatial axis, ordered (x, y[, z]).
    """

    dim: int
    cells: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.cells) != self.dim or len(self.lengths) != self.dim:
            raise ValueError("cells and lengths need one entry per axis")
        if any(int(c) != c or c < 1 for c in self.cells):
            raise ValueError(f"cell counts must be positive integers, got {self.cells}")
        if any(not (length > 0) for length in self.lengths):
            raise ValueError(f"lengths must be positive, got {self.lengths}")
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(length / c for length, c in zip(self.lengths, self.cells))

    @property
    def hmax(self) -> float:
        return max(self.h)

    @property
    def nodes(self) -> tuple[int, ...]:
        """Nodes per spatial axis, ordered (x, y[, z])."""
        return tuple(c + 1 for c in self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape of a nodal field (slowest axis first)."""
        return self.nodes[::-1]

    @property
    def size(self) -> int:
        return int(np.prod(self.nodes))

    def spacing(self) -> float:
        """Common spacing; raises if the grid is anisotropic."""
        h = self.h
        if not np.allclose(h, h[0], rtol=1e-12, atol=0.0):
            raise ValueError(f"compact stencils need equal spacings, got {h}")
        return h[0]

    def linear_index(self, multi) -> int:
        """Linear index of a node given as (ix, iy[, iz])."""
        return int(np.ravel_multi_index(tuple(multi)[::-1], self.shape))

    def multi_index(self, lin: int) -> tuple[int, ...]:
        """Inverse of :meth:`linear_index`."""
        return tuple(int(i) for i in np.unravel_index(lin, self.shape))[::-1]

    def coarsen(self) -> "GridSpec":
        if any(c % 2 for c in self.cells):
            raise ValueError(f"cannot coarsen grid with odd cell counts {self.cells}")
        return GridSpec(self.dim, tuple(c // 2 for c in self.cells), self.lengths)

    def zeros(self, dtype=complex) -> np.ndarray:
        return np.zeros(self.shape, dtype=dtype)


def build_grid(dim, cells, lengths) -> GridSpec:
    """Build a grid with ``cells`` cells over ``lengths`` per axis (x first)."""
    return GridSpec(int(dim), tuple(cells), tuple(lengths))


def unit_grid(dim: int, cells) -> GridSpec:
    """Grid with equal spacing ``1 / max(cells)`` along every axis."""
    cells = tuple(int(c) for c in cells)
    n = max(cells)
    return GridSpec(dim, cells, tuple(c / n for c in cells))


@dataclass(frozen=True)
class SlownessModel:
    """Squared slowness per node (array of shape ``grid.shape``)."""

    grid: GridSpec
    kappa_sq: np.ndarray = field(repr=False)

    def __post_init__(self):
        k = np.asarray(self.kappa_sq, dtype=float)
        if k.shape != self.grid.shape:
            raise ValueError(f"kappa_sq has shape {k.shape}, grid needs {self.grid.shape}")
        if not np.all(k > 0):
            raise ValueError("squared slowness must be strictly positive")
        k.setflags(write=False)
        object.__setattr__(self, "kappa_sq", k)

    @property
    def kappa_max(self) -> float:
        return float(np.sqrt(self.kappa_sq.max()))


@dataclass(frozen=True)
class AttenuationProfile:
    """Attenuation ratio gamma/omega per node."""

    grid: GridSpec
    gamma_over_omega: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.asarray(self.gamma_over_omega, dtype=float)
        if g.shape != self.grid.shape:
            raise ValueError(f"profile has shape {g.shape}, grid needs {self.grid.shape}")
        if np.any(g < 0):
            raise ValueError("attenuation must be non-negative")
        g.setflags(write=False)
        object.__setattr__(self, "gamma_over_omega", g)


def constant_model(grid: GridSpec, value: float = 1.0) -> SlownessModel:
    return SlownessModel(grid, np.full(grid.shape, float(value)))


def no_attenuation(grid: GridSpec) -> AttenuationProfile:
    return AttenuationProfile(grid, np.zeros(grid.shape))


def ppw_frequency(grid: GridSpec, model: SlownessModel, ppw: float) -> float:
    """Angular frequency resolving the shortest wavelength by ``ppw`` points.

    omega = 2 pi / (ppw * h_max * kappa_max).
    """
    if not ppw > 0:
        raise ValueError("ppw must be positive")
    return 2.0 * np.pi / (ppw * grid.hmax * model.kappa_max)


def boundary_distance(grid: GridSpec) -> np.ndarray:
    """Distance (in cells) from each node to the nearest boundary face."""
    d = None
    for ax, n in enumerate(grid.shape):
        i = np.arange(n)
        da = np.minimum(i, n - 1 - i)
        view = [1] * grid.dim
        view[ax] = n
        da = da.reshape(view)
        d = da if d is None else np.minimum(d, da)
    return np.broadcast_to(d, grid.shape).copy()


def absorbing_layer(grid: GridSpec, width_cells: int, gamma_max_over_omega: float = 1.0) -> AttenuationProfile:
    """Quadratic attenuation ramp over ``width_cells`` cells next to the boundary."""
    width = int(width_cells)
    if width < 1 or 2 * width >= min(grid.cells):
        raise ValueError(f"absorbing layer width {width_cells} does not fit grid cells {grid.cells}")
    if gamma_max_over_omega < 0:
        raise ValueError("gamma_max_over_omega must be non-negative")
    d = boundary_distance(grid).astype(float)
    ramp = np.where(d < width, ((width - d) / width) ** 2, 0.0)
    return AttenuationProfile(grid, gamma_max_over_omega * ramp)


def point_source_rhs(grid: GridSpec) -> np.ndarray:
    """Discrete delta of mass one at the node nearest the domain center."""
    q = grid.zeros()
    center = tuple(c // 2 for c in grid.cells)
    q[center[::-1]] = 1.0 / np.prod(grid.h)
    return q


# -- raster files -------------------------------------------------------------
#
# Plain text.  First line: ``dim nx ny [nz]`` (cell counts); then whitespace
# separated squared-slowness values in node order (x fastest).


class RasterFormatError(ValueError):
    """Malformed slowness raster file."""


def read_raster(path) -> SlownessModel:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise RasterFormatError(f"{path}: empty file")
    header = lines[0].split()
    try:
        dim = int(header[0])
        cells = tuple(int(v) for v in header[1:])
    except (ValueError, IndexError) as exc:
        raise RasterFormatError(f"{path}: bad header {lines[0]!r}") from exc
    if dim not in (2, 3) or len(cells) != dim:
        raise RasterFormatError(f"{path}: header {lines[0]!r} must be 'dim nx ny [nz]'")
    grid = unit_grid(dim, cells)
    try:
        values = np.array(" ".join(lines[1:]).split(), dtype=float)
    except ValueError as exc:
        raise RasterFormatError(f"{path}: non-numeric value") from exc
    if values.size != grid.size:
        raise RasterFormatError(
            f"{path}: expected {grid.size} values for {grid.nodes} nodes, got {values.size}"
        )
    if not np.all(values > 0):
        raise RasterFormatError(f"{path}: squared slowness values must be positive")
    return SlownessModel(grid, values.reshape(grid.shape))


def write_raster(path, model: SlownessModel) -> None:
    grid = model.grid
    with open(path, "w") as fh:
        fh.write(" ".join(str(v) for v in (grid.dim, *grid.cells)) + "\n")
        row = grid.shape[-1]
        flat = model.kappa_sq.ravel()
        for start in range(0, flat.size, row):
            fh.write(" ".join(repr(float(v)) for v in flat[start:start + row]) + "\n")
