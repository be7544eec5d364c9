"""Compact fourth-order Helmholtz operator and its complex-shifted version."""

from __future__ import annotations

import itertools

import numpy as np

from .grid import AttenuationProfile, GridSpec, SlownessModel
from .stencil import StencilOperator, domain_mask, linear_combination


def laplacian_weights(dim: int, h: float) -> dict:
    """Compact fourth-order stencil of ``-Laplacian`` keyed by offset."""
    w = {}
    if dim == 2:
        for off in itertools.product((-1, 0, 1), repeat=2):
            n = sum(abs(o) for o in off)
            w[off] = {0: 10 / 3, 1: -2 / 3, 2: -1 / 6}[n] / h**2
    else:
        # -(1/6h^2) * [24 center, -2 faces, -1 edges, 0 corners]
        for off in itertools.product((-1, 0, 1), repeat=3):
            n = sum(abs(o) for o in off)
            if n == 3:
                continue
            w[off] = {0: 4.0, 1: -1 / 3, 2: -1 / 6}[n] / h**2
    return w


def mass_weights(dim: int) -> dict:
    """Mass stencil of the compact scheme (weights sum to one)."""
    w = {(0,) * dim: 2 / 3 if dim == 2 else 1 / 2}
    for ax in range(dim):
        for s in (-1, 1):
            off = [0] * dim
            off[ax] = s
            w[tuple(off)] = 1 / 12
    return w


def _stencil(grid: GridSpec, weights: dict, scale_by=None) -> StencilOperator:
    offsets = sorted(weights)
    coeffs = np.empty((len(offsets),) + grid.shape, dtype=complex)
    for k, off in enumerate(offsets):
        c = np.where(domain_mask(grid.shape, off), weights[off], 0.0)
        coeffs[k] = c if scale_by is None else c * scale_by
    return StencilOperator(grid, offsets, coeffs, level=1)


def assemble_mass(grid: GridSpec) -> StencilOperator:
    return _stencil(grid, mass_weights(grid.dim))


def assemble_laplacian(grid: GridSpec) -> StencilOperator:
    return _stencil(grid, laplacian_weights(grid.dim, grid.spacing()))


def assemble_helmholtz(grid: GridSpec, model: SlownessModel, omega: float,
                       att: AttenuationProfile | None = None):
    """Assemble ``H = L - kappa^2 omega^2 (1 + i gamma/omega) M`` and ``M``.

    The attenuation enters with the same sign as the complex shift of
    :func:`apply_shift`, so both damp waves and add up in the absorbing
    layer.  The medium parameters are taken at the row's center node.  Couplings to
    nodes outside the domain are dropped (homogeneous Dirichlet exterior).

    Returns
    -------
    H, M : StencilOperator
    """
    if model.grid != grid or (att is not None and att.grid != grid):
        raise ValueError("model and attenuation must live on the given grid")
    if not omega > 0:
        raise ValueError("omega must be positive")
    g = 0.0 if att is None else att.gamma_over_omega
    sigma = model.kappa_sq * omega**2 * (1.0 + 1j * g)
    L = laplacian_weights(grid.dim, grid.spacing())
    Mw = mass_weights(grid.dim)
    M = _stencil(grid, Mw)
    offsets = sorted(L)
    coeffs = np.empty((len(offsets),) + grid.shape, dtype=complex)
    for k, off in enumerate(offsets):
        mask = domain_mask(grid.shape, off)
        coeffs[k] = np.where(mask, L[off] - sigma * Mw.get(off, 0.0), 0.0)
    return StencilOperator(grid, offsets, coeffs, level=1), M


def apply_shift(H: StencilOperator, M: StencilOperator, alpha: float, omega: float) -> StencilOperator:
    """Complex shifted operator ``H - i alpha omega^2 M``."""
    if H.grid != M.grid or H.level != M.level:
        raise ValueError("H and M must live on the same grid and level")
    if alpha == 0:
        return H
    return linear_combination(1.0, H, -1j * alpha * omega**2, M)
