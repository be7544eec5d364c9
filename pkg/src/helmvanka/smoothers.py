"""Additive Vanka smoothers on nodal grids.

A patch set is described by a list of member offsets and a box of anchor
nodes; patch ``i`` holds the in-domain nodes ``anchor_i + offsets``.  For the
centered kinds (jacobi, plus, rb, full) there is one patch per node and
patches near the boundary are clipped to the domain.  Element patches are
anchored at the lower corner of every cell and never leave the domain.

Each node's weight is one over the number of patches containing it, so the
weighted injections form a partition of unity.  The additive update

    u <- u + w * sum_i V_i^T W_i H_i^{-1} V_i (q - A u)

is linear in the residual; the sum is assembled once into a stencil operator
and a sweep costs one residual and one stencil product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .grid import GridSpec
from .stencil import StencilOperator

PATCH_KINDS = ("jacobi", "element", "plus", "rb", "full")

# chunk size for batched local inversions (number of matrix entries)
_CHUNK_ENTRIES = 1 << 22


class SingularPatchError(np.linalg.LinAlgError):
    """A Vanka patch matrix could not be inverted."""

    def __init__(self, center, kind):
        self.center = tuple(int(c) for c in center)
        super().__init__(
            f"singular {kind} patch matrix at node {self.center[::-1]} (x, y[, z]); "
            "the shift is probably too small for this level"
        )


def patch_offsets(kind: str, dim: int) -> np.ndarray:
    """Member offsets of a patch (array-axis order, lexicographic)."""
    box = [tuple(o) for o in itertools.product((-1, 0, 1), repeat=dim)]
    if kind == "jacobi":
        offs = [(0,) * dim]
    elif kind == "element":
        offs = list(itertools.product((0, 1), repeat=dim))
    elif kind == "plus":
        offs = [o for o in box if sum(map(abs, o)) <= 1]
    elif kind == "rb":
        offs = [o for o in box if sum(map(abs, o)) % 2 == 0]
    elif kind == "full":
        offs = box
    else:
        raise ValueError(f"unknown patch kind {kind!r}; expected one of {PATCH_KINDS}")
    return np.array(sorted(offs), dtype=np.int64).reshape(-1, dim)


def patch_size(kind: str, dim: int) -> int:
    return len(patch_offsets(kind, dim))


@dataclass(frozen=True)
class PatchSet:
    """Patch geometry and partition-of-unity weights on a grid."""

    grid: GridSpec
    kind: str
    offsets: np.ndarray
    anchor_shape: tuple
    counts: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.offsets)

    @property
    def n_patches(self) -> int:
        return int(np.prod(self.anchor_shape))

    def member_window(self, m, lo=0, hi=None):
        """Anchor/node slices for member ``m`` over anchors with axis-0 index in [lo, hi).

        Returns ``(anchor_slices, node_slices)`` restricted to anchors whose
        member ``m`` lies inside the domain; the anchor slices are relative to
        the anchor chunk.
        """
        if hi is None:
            hi = self.anchor_shape[0]
        off = self.offsets[m]
        a_sl, n_sl = [], []
        for ax, (o, na, n) in enumerate(zip(off, self.anchor_shape, self.grid.shape)):
            a0, a1 = (lo, hi) if ax == 0 else (0, na)
            b0 = max(a0, -o)
            b1 = min(a1, n - o)
            if b1 <= b0:
                return None
            base = a0 if ax == 0 else 0
            a_sl.append(slice(b0 - base, b1 - base))
            n_sl.append(slice(b0 + o, b1 + o))
        return tuple(a_sl), tuple(n_sl)

    def member_mask(self, m) -> np.ndarray:
        mask = np.zeros(self.anchor_shape, dtype=bool)
        win = self.member_window(m)
        if win is not None:
            mask[win[0]] = True
        return mask

    def patches(self):
        """Explicit list of (anchor, linear node indices) for every patch."""
        idx = np.arange(self.grid.size).reshape(self.grid.shape)
        masks = [self.member_mask(m) for m in range(self.size)]
        out = []
        for anchor in np.ndindex(*self.anchor_shape):
            members = [
                idx[tuple(a + o for a, o in zip(anchor, self.offsets[m]))]
                for m in range(self.size)
                if masks[m][anchor]
            ]
            out.append((anchor, np.array(members, dtype=np.int64)))
        return out


def build_patches(grid: GridSpec, kind: str) -> PatchSet:
    """Patch geometry with boundary clipping and per-node weights."""
    offsets = patch_offsets(kind, grid.dim)
    if kind == "element":
        anchor_shape = tuple(n - 1 for n in grid.shape)
    else:
        anchor_shape = grid.shape
    extent = int(np.ptp(offsets, axis=0).max()) + 1 if len(offsets) > 1 else 1
    if min(grid.shape) < extent:
        raise ValueError(f"grid {grid.nodes} is smaller than the {kind} patch extent {extent}")
    counts = np.zeros(grid.shape, dtype=np.int64)
    ps = PatchSet(grid, kind, offsets, anchor_shape, counts, counts)
    for m in range(len(offsets)):
        win = ps.member_window(m)
        if win is not None:
            counts[win[1]] += 1
    weights = 1.0 / counts
    return PatchSet(grid, kind, offsets, anchor_shape, counts, weights)


@dataclass
class VankaPatchSet:
    """Factorized patches of an operator and the assembled additive update.

    Attributes
    ----------
    patches : PatchSet
    damping : float
    update : StencilOperator
        ``sum_i V_i^T W_i H_i^{-1} V_i`` as a stencil operator.
    local_inverses : ndarray or None
        ``H_i^{-1}`` for every patch, shape ``(*anchor_shape, N, N)``; kept only
        for small grids (see ``keep_local``).
    """

    patches: PatchSet
    damping: float
    update: StencilOperator
    local_inverses: np.ndarray | None = None

    @property
    def kind(self):
        return self.patches.kind

    def with_damping(self, damping: float) -> "VankaPatchSet":
        return VankaPatchSet(self.patches, damping, self.update, self.local_inverses)

    def smooth(self, A: StencilOperator, u, q, sweeps: int = 1):
        """Apply ``sweeps`` additive Vanka sweeps, returning a new iterate."""
        u = np.array(u, dtype=complex, copy=True).reshape(A.shape)
        q = np.asarray(q).reshape(A.shape)
        for _ in range(sweeps):
            r = A.residual(u, q)
            kernels.stencil_apply(self.update.coeffs, self.update.offsets, r, u, self.damping)
        return u


def local_matrices(A: StencilOperator, ps: PatchSet, lo=0, hi=None) -> np.ndarray:
    """Patch matrices ``V_i A V_i^T`` for anchors with axis-0 index in [lo, hi).

    Members outside the domain get identity rows and columns.
    """
    if hi is None:
        hi = ps.anchor_shape[0]
    N = ps.size
    chunk_shape = (hi - lo,) + tuple(ps.anchor_shape[1:])
    Hloc = np.zeros(chunk_shape + (N, N), dtype=complex)
    for m in range(N):
        win = ps.member_window(m, lo, hi)
        if win is None:
            Hloc[..., m, m] = 1.0
            continue
        a_sl, n_sl = win
        diag = np.ones(chunk_shape, dtype=complex)
        diag[a_sl] = 0.0
        Hloc[..., m, m] = diag
        for n in range(N):
            d = ps.offsets[n] - ps.offsets[m]
            if not A.has_offset(d):
                continue
            Hloc[a_sl + (m, n)] += A.coefficient(d)[n_sl]
    return Hloc


def factor_patches(A: StencilOperator, patches: PatchSet, damping: float = 1.0,
                   keep_local: int = 1 << 18) -> VankaPatchSet:
    """Invert every patch matrix of ``A`` and assemble the additive update.

    Local inverses are kept on the result when the total number of stored
    entries does not exceed ``keep_local``.
    """
    ps = patches
    if ps.grid != A.grid:
        raise ValueError("patches were built on a different grid")
    N = ps.size
    diffs = sorted({tuple(int(v) for v in ps.offsets[n] - ps.offsets[m]) for m in range(N) for n in range(N)})
    slot = {d: k for k, d in enumerate(diffs)}
    coeffs = np.zeros((len(diffs),) + A.shape, dtype=complex)
    keep = ps.n_patches * N * N <= keep_local
    inverses = np.empty(tuple(ps.anchor_shape) + (N, N), dtype=complex) if keep else None

    plane = int(np.prod(ps.anchor_shape[1:])) * N * N
    step = max(1, _CHUNK_ENTRIES // max(plane, 1))
    for lo in range(0, ps.anchor_shape[0], step):
        hi = min(lo + step, ps.anchor_shape[0])
        Hloc = local_matrices(A, ps, lo, hi)
        try:
            Hinv = np.linalg.inv(Hloc)
            bad = ~np.isfinite(Hinv).all(axis=(-2, -1))
        except np.linalg.LinAlgError:
            Hinv = None
        if Hinv is None or bad.any():
            _raise_singular(Hloc, ps, lo)
        if keep:
            inverses[lo:hi] = Hinv
        for m in range(N):
            win = ps.member_window(m, lo, hi)
            if win is None:
                continue
            a_sl, n_sl = win
            wm = ps.weights[n_sl]
            for n in range(N):
                d = tuple(int(v) for v in ps.offsets[n] - ps.offsets[m])
                coeffs[slot[d]][n_sl] += wm * Hinv[a_sl + (m, n)]
    # couplings to nodes outside the domain never arise: H_i^{-1} is block
    # diagonal between in-domain members and the identity padding.
    update = StencilOperator(A.grid, diffs, coeffs, level=A.level).pruned()
    return VankaPatchSet(ps, float(damping), update, inverses)


def _raise_singular(Hloc, ps, lo):
    flat = Hloc.reshape((-1,) + Hloc.shape[-2:])
    for i, mat in enumerate(flat):
        try:
            inv = np.linalg.inv(mat)
        except np.linalg.LinAlgError:
            inv = None
        if inv is None or not np.isfinite(inv).all():
            idx = np.unravel_index(i, Hloc.shape[:-2])
            anchor = (idx[0] + lo,) + tuple(idx[1:])
            raise SingularPatchError(anchor, ps.kind)
    raise np.linalg.LinAlgError("patch inversion failed")


def apply_vanka(ps: VankaPatchSet, A: StencilOperator, u, q) -> np.ndarray:
    """One additive Vanka sweep ``u + w sum_i V_i^T W_i H_i^{-1} V_i (q - A u)``."""
    if ps.patches.grid != A.grid:
        raise ValueError("smoother and operator live on different grids")
    return ps.smooth(A, u, q, 1)


class FlopCount(NamedTuple):
    residual: int
    relaxation: int
    total: int


def smoother_flops(kind: str, level_radius: int = 1, dim: int = 2, stencil_points: int | None = None) -> FlopCount:
    """Multiply-add count per node for one relaxation sweep.

    The residual costs one operation per stencil point; the patch solve costs
    ``N^2`` per patch for an ``N``-point patch, with one patch per node.
    """
    if stencil_points is None:
        stencil_points = (2 * level_radius + 1) ** dim
    n = patch_size(kind, dim)
    return FlopCount(stencil_points, n * n, stencil_points + n * n)
