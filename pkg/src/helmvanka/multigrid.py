"""Shifted-Laplacian multigrid hierarchy and V/W cycles."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .helmholtz import apply_shift
from .intergrid import (
    IntergridOp,
    apply_prolongation,
    apply_restriction,
    galerkin_coarse,
    operator_complexity,
    select_intergrid,
)
from .smoothers import VankaPatchSet, build_patches, factor_patches
from .stencil import StencilOperator

# Per-level damping found by exhaustive search (fine level first).
DEFAULT_DAMPING = {
    2: {
        "jacobi": (0.89, 0.9, 0.3, 0.71),
        "element": (0.97, 0.66, 0.48, 0.88),
        "plus": (0.87, 0.57, 0.55, 0.74),
        "rb": (0.83, 0.5, 0.4, 0.65),
    },
    3: {
        "jacobi": (0.6, 0.4, 0.3, 0.5),
        "element": (1.1, 0.7, 0.45, 0.6),
        "plus": (0.92, 0.55, 0.45, 0.55),
    },
}
# kinds without tuned values borrow a neighbouring column
_DAMPING_FALLBACK = {(2, "full"): "plus", (3, "rb"): "plus", (3, "full"): "plus"}

CYCLES = ("V", "W")

DENSE_COARSE_LIMIT = 1024
MIN_COARSE_CELLS = 4


def default_damping(kind: str, dim: int, levels: int) -> list[float]:
    """Per-level damping, repeating the last tabulated value on deeper levels."""
    kind = _DAMPING_FALLBACK.get((dim, kind), kind)
    table = DEFAULT_DAMPING[dim][kind]
    n = max(levels, 1)
    return [table[min(i, len(table) - 1)] for i in range(n)]


@dataclass
class MgConfig:
    levels: int = 2
    cycle: str = "V"
    nu1: int = 1
    nu2: int = 1
    scheme: str = "level_dependent"
    smoother: str = "rb"
    alpha: float = 0.0
    damping: list | None = None

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be at least 1")
        if self.cycle not in CYCLES:
            raise ValueError(f"cycle must be 'V' or 'W', got {self.cycle!r}")
        if self.nu1 < 0 or self.nu2 < 0:
            raise ValueError("relaxation counts must be non-negative")

    def damping_for(self, dim: int) -> list[float]:
        """Per-level damping: explicit values first, defaults for the remaining levels."""
        base = default_damping(self.smoother, dim, self.levels)
        given = [float(w) for w in (self.damping or [])]
        return given[: len(base)] + base[len(given):]


@dataclass
class MgLevel:
    A: StencilOperator
    smoother: VankaPatchSet | None = None
    R: IntergridOp | None = None
    P: IntergridOp | None = None


class CoarseSolver:
    """Direct solver for the coarsest operator."""

    def __init__(self, A: StencilOperator):
        self.shape = A.shape
        mat = A.to_csr()
        n = mat.shape[0]
        if n <= DENSE_COARSE_LIMIT:
            dense = mat.toarray()
            self._lu = sla.lu_factor(dense, check_finite=True)
            if np.any(np.diag(self._lu[0]) == 0):
                raise np.linalg.LinAlgError("singular coarsest operator")
            self._solve = lambda b: sla.lu_solve(self._lu, b)
        else:
            try:
                self._lu = spla.splu(mat.tocsc())
            except RuntimeError as exc:
                raise np.linalg.LinAlgError(f"singular coarsest operator: {exc}") from exc
            self._solve = self._lu.solve
        self.n = n

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=complex)
        return self._solve(r.ravel()).reshape(r.shape)


@dataclass
class MgHierarchy:
    config: MgConfig
    levels: list
    coarse: CoarseSolver
    coarse_solves: int = field(default=0)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def operators(self) -> list:
        return [lvl.A for lvl in self.levels]

    @property
    def finest(self) -> StencilOperator:
        return self.levels[0].A

    def operator_complexity(self) -> float:
        return operator_complexity(self.operators)

    def stencil_radii(self) -> list[int]:
        return [A.max_coupling_distance() for A in self.operators]

    def cycle(self, q, u=None) -> np.ndarray:
        return cycle(self, q, u)

    def precondition(self, r) -> np.ndarray:
        """One cycle on ``A e = r`` from a zero initial guess."""
        return cycle(self, r, None)


def build_hierarchy(H: StencilOperator, M: StencilOperator, cfg: MgConfig, omega: float) -> MgHierarchy:
    """Shift the fine operator once and coarsen it by Galerkin products."""
    grid = H.grid
    if any(c % (2 ** (cfg.levels - 1)) for c in grid.cells):
        raise ValueError(f"cells {grid.cells} are not divisible by 2^{cfg.levels - 1}")
    damping = cfg.damping_for(grid.dim)
    A = apply_shift(H, M, cfg.alpha, omega)
    levels = []
    depth = cfg.levels
    for lvl in range(1, cfg.levels):
        if min(A.grid.cells) // 2 < MIN_COARSE_CELLS:
            warnings.warn(
                f"truncating hierarchy at level {lvl}: grid {A.grid.cells} is too coarse",
                RuntimeWarning,
                stacklevel=2,
            )
            depth = lvl
            break
        R, P = select_intergrid(cfg.scheme, lvl, grid.dim)
        smoother = factor_patches(A, build_patches(A.grid, cfg.smoother), damping[lvl - 1])
        levels.append(MgLevel(A, smoother, R, P))
        A = galerkin_coarse(R, A, P)
    levels.append(MgLevel(A))
    hier = MgHierarchy(cfg, levels, CoarseSolver(A))
    if depth != cfg.levels:
        hier.config = MgConfig(depth, cfg.cycle, cfg.nu1, cfg.nu2, cfg.scheme, cfg.smoother, cfg.alpha, cfg.damping)
    return hier


def coarse_operators(A: StencilOperator, scheme: str, levels: int) -> list:
    """Galerkin operators of every level without smoother setup."""
    if any(c % (2 ** (levels - 1)) for c in A.grid.cells):
        raise ValueError(f"cells {A.grid.cells} are not divisible by 2^{levels - 1}")
    ops = [A]
    for lvl in range(1, levels):
        R, P = select_intergrid(scheme, lvl, A.grid.dim)
        ops.append(galerkin_coarse(R, ops[-1], P))
    return ops


def coarse_solve(hier: MgHierarchy, r_coarse) -> np.ndarray:
    hier.coarse_solves += 1
    return hier.coarse(r_coarse)


def _cycle(hier: MgHierarchy, lvl: int, q, u):
    if lvl == hier.depth - 1:
        return coarse_solve(hier, q)
    cfg = hier.config
    level = hier.levels[lvl]
    A = level.A
    if u is None:
        u = np.zeros(A.shape, dtype=complex)
    u = level.smoother.smooth(A, u, q, cfg.nu1)
    rc = apply_restriction(level.R, A.residual(u, q))
    ec = None
    for _ in range(2 if cfg.cycle == "W" else 1):
        ec = _cycle(hier, lvl + 1, rc, ec)
    u += apply_prolongation(level.P, ec)
    return level.smoother.smooth(A, u, q, cfg.nu2)


def cycle(hier: MgHierarchy, q, u=None) -> np.ndarray:
    """One V- or W-cycle for ``A_s u = q`` on the finest level."""
    q = np.asarray(q)
    shape = hier.finest.shape
    u0 = None if u is None else np.array(u, dtype=complex).reshape(shape)
    return _cycle(hier, 0, q.reshape(shape), u0).reshape(q.shape)


def mg_solve(hier: MgHierarchy, q, u0=None, tol: float = 1e-6, maxiter: int = 100, A: StencilOperator | None = None):
    """Stationary multigrid iteration ``u <- cycle(q, u)``.

    Residuals are measured against ``A`` (default: the finest shifted
    operator).  Returns the iterate and the relative residual history, whose
    first entry belongs to the initial guess.
    """
    A = hier.finest if A is None else A
    q = np.asarray(q, dtype=complex).reshape(A.shape)
    u = np.zeros(A.shape, dtype=complex) if u0 is None else np.array(u0, dtype=complex).reshape(A.shape)
    qn = np.linalg.norm(q)
    scale = qn if qn > 0 else np.linalg.norm(A.residual(u, q))
    history = [np.linalg.norm(A.residual(u, q)) / scale]
    for _ in range(maxiter):
        if history[-1] < tol:
            break
        u = cycle(hier, q, u)
        history.append(np.linalg.norm(A.residual(u, q)) / scale)
        if not np.isfinite(history[-1]):
            break
    return u, history


def cycle_spectral_radius(hier: MgHierarchy, iterations: int = 30, seed: int = 0) -> float:
    """Power-iteration estimate of the cycle's error-propagation spectral radius."""
    rng = np.random.default_rng(seed)
    shape = hier.finest.shape
    e = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    e /= np.linalg.norm(e)
    zero = np.zeros(shape, dtype=complex)
    rho = 0.0
    norms = []
    for _ in range(iterations):
        e = cycle(hier, zero, e)
        nrm = np.linalg.norm(e)
        if not np.isfinite(nrm) or nrm == 0:
            return float("inf") if not np.isfinite(nrm) else 0.0
        norms.append(nrm)
        e /= nrm
    tail = norms[len(norms) // 2:]
    rho = float(np.exp(np.mean(np.log(tail))))
    return rho
