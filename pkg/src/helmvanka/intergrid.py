"""Restriction/prolongation, intergrid schemes and Galerkin coarsening.

Both intergrid kinds are tensor products of a symmetric 1D weight vector,
``[1, 2, 1] / 4`` (full weighting / linear interpolation) or
``[1, 4, 6, 4, 1] / 16`` (cubic).  Restriction takes fine node ``2I + k`` with
weight ``w[k]`` into coarse node ``I``; prolongation is ``2**dim`` times the
transpose.  Weights that would reach outside the domain are dropped without
renormalization, so ``P = 2**dim R^T`` holds exactly up to the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .stencil import StencilOperator

WEIGHTS_1D = {
    "linear": np.array([1.0, 2.0, 1.0]) / 4.0,
    "cubic": np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0,
}

SCHEMES = ("linear", "cubic", "mixed", "level_dependent")


@dataclass(frozen=True)
class IntergridOp:
    """Separable restriction or prolongation of a given kind."""

    kind: str
    dim: int
    role: str = "restriction"

    def __post_init__(self):
        if self.kind not in WEIGHTS_1D:
            raise ValueError(f"unknown intergrid kind {self.kind!r}")
        if self.role not in ("restriction", "prolongation"):
            raise ValueError(f"unknown role {self.role!r}")

    @property
    def weights1d(self) -> np.ndarray:
        return WEIGHTS_1D[self.kind]

    @property
    def radius(self) -> int:
        return len(self.weights1d) // 2

    @property
    def scale(self) -> float:
        return 2.0**self.dim if self.role == "prolongation" else 1.0

    @property
    def stencil(self) -> np.ndarray:
        """Full restriction stencil as a ``dim``-dimensional array."""
        return reduce(np.multiply.outer, [self.weights1d] * self.dim)


def restriction(kind, dim) -> IntergridOp:
    return IntergridOp(kind, dim, "restriction")


def prolongation(kind, dim) -> IntergridOp:
    return IntergridOp(kind, dim, "prolongation")


def scheme_kinds(scheme: str, fine_level: int) -> tuple[str, str]:
    """(restriction kind, prolongation kind) between ``fine_level`` and the next."""
    if fine_level < 1:
        raise ValueError("levels are numbered from 1")
    if scheme in ("linear", "cubic"):
        return scheme, scheme
    if scheme == "mixed":
        return "linear", "cubic"
    if scheme == "level_dependent":
        return ("cubic", "cubic") if fine_level == 1 else ("linear", "cubic")
    raise ValueError(f"unknown intergrid scheme {scheme!r}; expected one of {SCHEMES}")


def select_intergrid(scheme: str, fine_level: int, dim: int = 2):
    r_kind, p_kind = scheme_kinds(scheme, fine_level)
    return restriction(r_kind, dim), prolongation(p_kind, dim)


# -- application ----------------------------------------------------------------


def _check_even(shape):
    for n in shape:
        if (n - 1) % 2 or n < 3:
            raise ValueError(f"restriction needs an even number of cells per axis, got nodes {shape}")


def _restrict_axis(u, axis, w):
    r = len(w) // 2
    nf = u.shape[axis]
    nc = (nf - 1) // 2 + 1
    u = np.moveaxis(u, axis, 0)
    pad = np.zeros((nf + 2 * r,) + u.shape[1:], dtype=u.dtype)
    pad[r:r + nf] = u
    out = np.zeros((nc,) + u.shape[1:], dtype=u.dtype)
    for k in range(-r, r + 1):
        out += w[k + r] * pad[r + k:r + k + 2 * nc - 1:2]
    return np.moveaxis(out, 0, axis)


def _prolong_axis(e, axis, w):
    r = len(w) // 2
    nc = e.shape[axis]
    nf = 2 * (nc - 1) + 1
    e = np.moveaxis(e, axis, 0)
    pad = np.zeros((nf + 2 * r,) + e.shape[1:], dtype=e.dtype)
    for k in range(-r, r + 1):
        pad[r + k:r + k + 2 * nc - 1:2] += (2.0 * w[k + r]) * e
    return np.moveaxis(pad[r:r + nf], 0, axis)


def apply_restriction(R: IntergridOp, fine) -> np.ndarray:
    """Restrict a nodal field (array shaped like the fine grid)."""
    fine = np.asarray(fine)
    if fine.ndim != R.dim:
        raise ValueError(f"expected a {R.dim}D nodal array, got shape {fine.shape}")
    _check_even(fine.shape)
    out = fine
    for ax in range(R.dim):
        out = _restrict_axis(out, ax, R.weights1d)
    return out


def apply_prolongation(P: IntergridOp, coarse) -> np.ndarray:
    """Prolong a coarse nodal field to the grid with doubled cell counts."""
    coarse = np.asarray(coarse)
    if coarse.ndim != P.dim:
        raise ValueError(f"expected a {P.dim}D nodal array, got shape {coarse.shape}")
    out = coarse
    for ax in range(P.dim):
        out = _prolong_axis(out, ax, P.weights1d)
    return out


def restriction_matrix_1d(kind, nf_nodes) -> sp.csr_matrix:
    w = WEIGHTS_1D[kind]
    r = len(w) // 2
    nc = (nf_nodes - 1) // 2 + 1
    rows, cols, vals = [], [], []
    for I in range(nc):
        for k in range(-r, r + 1):
            i = 2 * I + k
            if 0 <= i < nf_nodes:
                rows.append(I)
                cols.append(i)
                vals.append(w[k + r])
    return sp.csr_matrix((vals, (rows, cols)), shape=(nc, nf_nodes))


def intergrid_matrix(op: IntergridOp, fine_shape) -> sp.csr_matrix:
    """Sparse matrix of ``op`` in linear node order (coarse x fine for R)."""
    mats = [restriction_matrix_1d(op.kind, n) for n in fine_shape]
    R = reduce(lambda a, b: sp.kron(a, b, format="csr"), mats)
    if op.role == "prolongation":
        return (op.scale * R.T).tocsr()
    return R


# -- Galerkin coarsening --------------------------------------------------------


def _coarsen_axis(ops: dict, shape, axis, wr, wp):
    """One-axis Galerkin product ``R_a A P_a`` on stencil form.

    ``ops`` maps offset tuples to coefficient arrays of ``shape``.  The
    prolongation weights ``wp`` already carry the per-axis factor 2.
    """
    rr, rp = len(wr) // 2, len(wp) // 2
    nf = shape[axis]
    nc = (nf - 1) // 2 + 1
    cshape = list(shape)
    cshape[axis] = nc
    cshape = tuple(cshape)
    out: dict = {}
    for off, c in ops.items():
        s = off[axis]
        cm = np.moveaxis(c, axis, 0)
        pad = np.zeros((nf + 2 * rr,) + cm.shape[1:], dtype=complex)
        pad[rr:rr + nf] = cm
        for k in range(-rr, rr + 1):
            sl = pad[rr + k:rr + k + 2 * nc - 1:2]
            lo = -((rp - k - s) // 2)  # ceil((k + s - rp) / 2)
            hi = (k + s + rp) // 2
            for D in range(lo, hi + 1):
                wgt = wr[k + rr] * wp[k + s - 2 * D + rp]
                if wgt == 0:
                    continue
                key = off[:axis] + (D,) + off[axis + 1:]
                acc = out.get(key)
                if acc is None:
                    acc = out[key] = np.zeros((nc,) + cm.shape[1:], dtype=complex)
                acc += wgt * sl
    result = {}
    for key, acc in out.items():
        D = key[axis]
        if D > 0:
            acc[nc - D:] = 0
        elif D < 0:
            acc[:-D] = 0
        result[key] = np.moveaxis(acc, 0, axis)
    return result, cshape


def galerkin_coarse(R: IntergridOp, A: StencilOperator, P: IntergridOp, rtol: float = 0.0) -> StencilOperator:
    """Coarse operator ``R A P`` computed directly on stencils.

    The separable intergrid lets the triple product factor into one
    semi-coarsening per axis.  Offsets whose coefficients are all below
    ``rtol`` times the largest coefficient are dropped.
    """
    grid = A.grid
    if R.dim != grid.dim or P.dim != grid.dim:
        raise ValueError("intergrid dimension does not match the operator")
    coarse_grid = grid.coarsen()
    ops = {tuple(int(v) for v in off): A.coeffs[k] for k, off in enumerate(A.offsets)}
    shape = grid.shape
    wr, wp = R.weights1d, 2.0 * P.weights1d
    for ax in range(grid.dim):
        ops, shape = _coarsen_axis(ops, shape, ax, wr, wp)
    keys = sorted(ops)
    coeffs = np.stack([ops[k] for k in keys])
    peak = np.abs(coeffs).reshape(len(keys), -1).max(axis=1)
    keep = peak > rtol * peak.max()
    keep[keys.index((0,) * grid.dim)] = True
    keys = [k for k, flag in zip(keys, keep) if flag]
    return StencilOperator(coarse_grid, keys, coeffs[keep], level=A.level + 1)


def galerkin_sparse(R: IntergridOp, A: StencilOperator, P: IntergridOp) -> sp.csr_matrix:
    """Generic sparse triple product, kept as an independent reference."""
    Rm = intergrid_matrix(R, A.grid.shape)
    Pm = intergrid_matrix(P, A.grid.shape)
    return (Rm @ A.to_csr() @ Pm).tocsr()


def operator_complexity(ops) -> float:
    """Total nonzeros over all levels relative to the finest operator."""
    ops = list(ops)
    if not ops:
        raise ValueError("operator list is empty")
    return sum(op.nnz() for op in ops) / ops[0].nnz()
