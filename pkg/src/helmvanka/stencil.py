"""Variable-coefficient stencil operators on nodal grids."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import kernels
from .grid import GridSpec


class StencilOperator:
    """Sparse operator given by a per-node stencil.

    Row ``j`` of the operator couples node ``j`` with node ``j + offsets[k]``
    with coefficient ``coeffs[k][j]``.  Offsets are in array-axis order (see
    :mod:`helmvanka.grid`).  Coefficients of couplings that leave the domain
    are kept at exactly zero.

    Parameters
    ----------
    grid : GridSpec
    offsets : array_like, shape (K, dim)
    coeffs : ndarray, shape (K, *grid.shape)
    level : int
        Hierarchy level the operator lives on (1 is finest).
    """

    def __init__(self, grid: GridSpec, offsets, coeffs, level: int = 1):
        offsets = np.asarray(offsets, dtype=np.int64).reshape(-1, grid.dim)
        coeffs = np.ascontiguousarray(coeffs, dtype=complex)
        if coeffs.shape != (len(offsets),) + grid.shape:
            raise ValueError(
                f"coeffs shape {coeffs.shape} does not match {len(offsets)} offsets on {grid.shape}"
            )
        self.grid = grid
        self.offsets = offsets
        self.coeffs = coeffs
        self.level = level
        self._index = {tuple(int(v) for v in o): k for k, o in enumerate(offsets)}

    def __repr__(self):
        return (
            f"StencilOperator(nodes={self.grid.nodes}, points={len(self.offsets)}, "
            f"radius={self.stencil_radius}, level={self.level})"
        )

    @property
    def shape(self):
        return self.grid.shape

    @property
    def stencil_radius(self) -> int:
        if len(self.offsets) == 0:
            return 0
        return int(np.abs(self.offsets).max())

    def coefficient(self, offset) -> np.ndarray:
        """Coefficient field for ``offset`` (zeros if the offset is absent)."""
        k = self._index.get(tuple(int(v) for v in offset))
        if k is None:
            return np.zeros(self.shape, dtype=complex)
        return self.coeffs[k]

    def has_offset(self, offset) -> bool:
        return tuple(int(v) for v in offset) in self._index

    def diagonal(self) -> np.ndarray:
        return self.coefficient((0,) * self.grid.dim)

    def matvec(self, u) -> np.ndarray:
        u = np.asarray(u)
        out = np.zeros(self.shape, dtype=complex)
        kernels.stencil_apply(self.coeffs, self.offsets, u.reshape(self.shape), out)
        return out.reshape(u.shape)

    __matmul__ = matvec

    def residual(self, u, q) -> np.ndarray:
        q = np.asarray(q)
        r = kernels.stencil_residual(
            self.coeffs, self.offsets, np.asarray(u).reshape(self.shape), q.reshape(self.shape)
        )
        return r.reshape(q.shape)

    def nnz(self, rtol: float = 1e-14) -> int:
        """Count couplings whose magnitude exceeds ``rtol`` times the row maximum."""
        mag = np.abs(self.coeffs)
        rowmax = mag.max(axis=0)
        return int(np.count_nonzero(mag > rtol * rowmax))

    def max_coupling_distance(self, rtol: float = 1e-14) -> int:
        """Largest Chebyshev offset carrying a coupling above ``rtol`` of the row max."""
        mag = np.abs(self.coeffs)
        rowmax = mag.max(axis=0)
        live = (mag > rtol * rowmax).reshape(len(self.offsets), -1).any(axis=1)
        if not live.any():
            return 0
        return int(np.abs(self.offsets[live]).max())

    def pruned(self) -> "StencilOperator":
        """Drop offsets whose coefficients vanish everywhere."""
        keep = np.abs(self.coeffs).reshape(len(self.offsets), -1).max(axis=1) > 0
        center = self._index.get((0,) * self.grid.dim)
        if center is not None:
            keep[center] = True
        return StencilOperator(self.grid, self.offsets[keep], self.coeffs[keep], self.level)

    def to_csr(self) -> sp.csr_matrix:
        """Assemble the operator as a sparse matrix in linear node order."""
        n = self.grid.size
        idx = np.arange(n).reshape(self.shape)
        rows, cols, vals = [], [], []
        for k, off in enumerate(self.offsets):
            dst, src = kernels._windows(off, self.shape)
            c = self.coeffs[k][dst]
            rows.append(idx[dst].ravel())
            cols.append(idx[src].ravel())
            vals.append(c.ravel())
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        keep = vals != 0
        return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n))

    def scaled(self, factor) -> "StencilOperator":
        return StencilOperator(self.grid, self.offsets, self.coeffs * factor, self.level)


def linear_combination(a, A: StencilOperator, b, B: StencilOperator) -> StencilOperator:
    """Return ``a*A + b*B`` over the union of both offset sets."""
    if A.grid != B.grid:
        raise ValueError("operators live on different grids")
    if A.level != B.level:
        raise ValueError("operators live on different levels")
    keys = list(A._index)
    keys += [o for o in B._index if o not in A._index]
    coeffs = np.zeros((len(keys),) + A.shape, dtype=complex)
    for k, off in enumerate(keys):
        if off in A._index:
            coeffs[k] += a * A.coeffs[A._index[off]]
        if off in B._index:
            coeffs[k] += b * B.coeffs[B._index[off]]
    return StencilOperator(A.grid, keys, coeffs, A.level)


def domain_mask(shape, offset) -> np.ndarray:
    """Boolean field: True where ``node + offset`` is inside the array."""
    mask = np.zeros(shape, dtype=bool)
    dst, _ = kernels._windows(offset, shape)
    mask[dst] = True
    return mask


def _check(A: StencilOperator, u):
    if np.size(u) != A.grid.size:
        raise ValueError(f"field of size {np.size(u)} does not live on grid with {A.grid.size} nodes")


def matvec(A: StencilOperator, u) -> np.ndarray:
    _check(A, u)
    return A.matvec(u)


def residual(A: StencilOperator, u, q) -> np.ndarray:
    _check(A, u)
    _check(A, q)
    return A.residual(u, q)
