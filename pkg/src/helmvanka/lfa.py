"""Local Fourier analysis of additive Vanka smoothers in 2D.

Frequencies are pairs ``theta = (theta_x, theta_y)``; a stencil offset
``(dy, dx)`` in array-axis order contributes the phase
``exp(i (theta_x dx + theta_y dy))``.  All symbols accept broadcastable arrays
of frequencies.

The prolongation ``P = 4 R^T`` has the symbol ``P~(theta_a) = R~(theta_a)`` in
the harmonic basis used here.  Any constant factor in this convention cancels
in the two-grid operator ``P Hc^{-1} R``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .smoothers import patch_offsets

LFA_KINDS = ("jacobi", "element", "plus", "rb")

# samples whose coarse symbol is below this multiple of h^-2 are skipped
SINGULAR_THRESHOLD = 1e-12
# low frequencies with |H~| h^2 below this lie on the characteristic band:
# no smoother acts there and the sampled supremum would only measure how
# close the grid comes to H~ = 0, so they are skipped as well
CHARACTERISTIC_BAND = 1e-2


class Frequency2(NamedTuple):
    """A frequency pair in ``[-pi/2, 3pi/2)^2``."""

    theta1: float
    theta2: float


def wrap(theta):
    """Map angles into ``[-pi/2, 3pi/2)``."""
    return np.mod(np.asarray(theta, dtype=float) + np.pi / 2, 2 * np.pi) - np.pi / 2


def harmonics(theta1, theta2):
    """The four aliases ``theta, theta + (pi, pi), theta + (pi, 0), theta + (0, pi)``."""
    t1, t2 = np.asarray(theta1, dtype=float), np.asarray(theta2, dtype=float)
    shifts = ((0.0, 0.0), (np.pi, np.pi), (np.pi, 0.0), (0.0, np.pi))
    return [(wrap(t1 + s1), wrap(t2 + s2)) for s1, s2 in shifts]


def compact_stencil(h: float, sigma: complex = 0.0) -> dict:
    """Constant-coefficient compact stencil ``L - sigma M`` keyed by (dy, dx)."""
    if not h > 0:
        raise ValueError("h must be positive")
    a = 10 / (3 * h**2) - 2 * sigma / 3
    b = -2 / (3 * h**2) - sigma / 12
    c = -1 / (6 * h**2)
    st = {}
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            n = abs(dx) + abs(dy)
            st[(dy, dx)] = complex((a, b, c)[n])
    return st


def stencil_symbol(stencil: dict, theta1, theta2):
    """Symbol ``sum_k s_k exp(i theta . d_k)`` of a constant 2D stencil."""
    t1, t2 = np.asarray(theta1, dtype=float), np.asarray(theta2, dtype=float)
    out = np.zeros(np.broadcast(t1, t2).shape, dtype=complex)
    for (dy, dx), c in stencil.items():
        out = out + c * np.exp(1j * (t1 * dx + t2 * dy))
    return out


def helmholtz_symbol(theta1, theta2, h: float, sigma: complex = 0.0):
    """``a + 2b cos(theta1) + 2b cos(theta2) + 4c cos(theta1) cos(theta2)``."""
    if not h > 0:
        raise ValueError("h must be positive")
    a = 10 / (3 * h**2) - 2 * sigma / 3
    b = -2 / (3 * h**2) - sigma / 12
    c = -1 / (6 * h**2)
    c1, c2 = np.cos(theta1), np.cos(theta2)
    return a + 2 * b * c1 + 2 * b * c2 + 4 * c * c1 * c2


def patch_matrix(kind: str, stencil: dict) -> np.ndarray:
    """Local matrix ``H_i`` of a patch for a constant stencil."""
    offs = patch_offsets(kind, 2)
    N = len(offs)
    Hi = np.zeros((N, N), dtype=complex)
    for m in range(N):
        for n in range(N):
            d = tuple(int(v) for v in offs[n] - offs[m])
            Hi[m, n] = stencil.get(d, 0.0)
    return Hi


def _inverse_symbol(kind: str, stencil: dict, theta1, theta2):
    """``V^T W Phi^H H_i^{-1} Phi V`` with ``W = I / N``."""
    if kind not in LFA_KINDS:
        raise ValueError(f"unknown patch kind {kind!r}; expected one of {LFA_KINDS}")
    Hi = patch_matrix(kind, stencil)
    try:
        Hinv = np.linalg.inv(Hi)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular {kind} patch matrix for this stencil") from exc
    if not np.isfinite(Hinv).all() or np.linalg.cond(Hi) > 1e14:
        raise np.linalg.LinAlgError(f"singular {kind} patch matrix for this stencil")
    offs = patch_offsets(kind, 2)
    t1, t2 = np.broadcast_arrays(np.asarray(theta1, dtype=float), np.asarray(theta2, dtype=float))
    phi = np.exp(1j * (t1[..., None] * offs[:, 1] + t2[..., None] * offs[:, 0]))
    return np.einsum("...m,mn,...n->...", phi.conj(), Hinv, phi) / len(offs)


def vanka_symbol(kind: str, theta1, theta2, w: float, h: float, sigma: complex = 0.0, stencil=None):
    """Error-propagation symbol of one additive Vanka sweep.

    Parameters
    ----------
    kind : {'jacobi', 'element', 'plus', 'rb'}
    theta1, theta2 : array_like
        Frequencies along x and y.
    w : float
        Damping.
    h : float
        Mesh size of the compact stencil.
    sigma : complex
        ``kappa^2 omega^2`` including any attenuation or shift.
    stencil : dict, optional
        Replaces the compact stencil (offsets in (dy, dx) order), e.g. for a
        Galerkin coarse operator; ``h`` and ``sigma`` are then ignored.
    """
    st = compact_stencil(h, sigma) if stencil is None else stencil
    Ht = stencil_symbol(st, theta1, theta2)
    return 1.0 - w * _inverse_symbol(kind, st, theta1, theta2) * Ht


def sample_high(resolution: int = 256):
    """Cell-midpoint samples of ``[-pi/2, 3pi/2)^2`` lying outside ``[-pi/2, pi/2]^2``."""
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    t = -np.pi / 2 + (np.arange(resolution) + 0.5) * (2 * np.pi / resolution)
    t1, t2 = np.meshgrid(t, t, indexing="xy")
    high = (np.abs(t1) > np.pi / 2) | (np.abs(t2) > np.pi / 2)
    return t1[high], t2[high]


def sample_low(resolution: int = 256):
    """Cell-midpoint samples of ``[-pi/2, pi/2]^2``; ``resolution`` points per axis."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    t = -np.pi / 2 + (np.arange(resolution) + 0.5) * (np.pi / resolution)
    t1, t2 = np.meshgrid(t, t, indexing="xy")
    return t1.ravel(), t2.ravel()


def smoothing_factor(kind: str, w: float, h: float, sigma: complex = 0.0, resolution: int = 256, stencil=None) -> float:
    """``mu_loc``: largest ``|S~|`` over the sampled high frequencies."""
    t1, t2 = sample_high(resolution)
    return float(np.abs(vanka_symbol(kind, t1, t2, w, h, sigma, stencil)).max())


def intergrid_symbol(kind: str, theta1, theta2):
    """Symbol of the normalized restriction stencil of the given kind."""
    c1, c2 = np.cos(theta1), np.cos(theta2)
    if kind == "linear":
        return 0.25 * (1 + c1) * (1 + c2)
    if kind == "cubic":
        return (3 + 4 * c1 + np.cos(2 * np.asarray(theta1))) * (3 + 4 * c2 + np.cos(2 * np.asarray(theta2))) / 64.0
    raise ValueError(f"unknown intergrid kind {kind!r}")


@dataclass
class TwoGridConfig:
    kind: str = "rb"
    w: float = 1.0
    nu1: int = 1
    nu2: int = 1
    restriction: str = "cubic"
    prolongation: str = "cubic"
    h: float = 1.0 / 256
    sigma: complex = 0.0
    resolution: int = 256
    char_band: float = CHARACTERISTIC_BAND
    stencil: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.nu1 < 0 or self.nu2 < 0:
            raise ValueError("relaxation counts must be non-negative")


def twogrid_symbols(cfg: TwoGridConfig, theta1, theta2) -> np.ndarray:
    """4x4 two-grid symbol matrices for each low frequency, shape ``(..., 4, 4)``."""
    st = compact_stencil(cfg.h, cfg.sigma) if cfg.stencil is None else cfg.stencil
    harm = harmonics(theta1, theta2)
    Hd = np.stack([stencil_symbol(st, *t) for t in harm], axis=-1)
    Sd = np.stack([1.0 - cfg.w * _inverse_symbol(cfg.kind, st, *t) * Hd[..., a] for a, t in enumerate(harm)], axis=-1)
    Rv = np.stack([intergrid_symbol(cfg.restriction, *t) for t in harm], axis=-1)
    Pv = np.stack([intergrid_symbol(cfg.prolongation, *t) for t in harm], axis=-1)
    Hc = np.sum(Rv * Hd * Pv, axis=-1)
    K = np.eye(4) - Pv[..., :, None] * (Rv * Hd)[..., None, :] / Hc[..., None, None]
    S1 = np.linalg.matrix_power(_diag(Sd), cfg.nu1) if cfg.nu1 else np.broadcast_to(np.eye(4), K.shape)
    S2 = np.linalg.matrix_power(_diag(Sd), cfg.nu2) if cfg.nu2 else np.broadcast_to(np.eye(4), K.shape)
    return S2 @ K @ S1, Hc


def _diag(d):
    out = np.zeros(d.shape + (4,), dtype=complex)
    idx = np.arange(4)
    out[..., idx, idx] = d
    return out


def twogrid_factor(cfg: TwoGridConfig) -> float:
    """``rho_loc``: largest spectral radius of the two-grid symbol over low frequencies.

    ``cfg.resolution`` is the number of samples per axis of the full
    frequency square, so the low square gets half as many per axis.  Samples
    with a singular coarse symbol or inside the characteristic band
    ``|H~(theta)| h^2 < cfg.char_band`` are skipped.
    """
    t1, t2 = sample_low(max(cfg.resolution // 2, 2))
    TG, Hc = twogrid_symbols(cfg, t1, t2)
    st = compact_stencil(cfg.h, cfg.sigma) if cfg.stencil is None else cfg.stencil
    Hf = np.abs(stencil_symbol(st, t1, t2))
    keep = (np.abs(Hc) >= SINGULAR_THRESHOLD / cfg.h**2) & (Hf >= cfg.char_band / cfg.h**2)
    if not keep.any():
        raise ValueError("every low-frequency sample has a singular coarse symbol")
    eig = np.linalg.eigvals(TG[keep])
    return float(np.abs(eig).max())


def damping_sweep(kind: str, w_grid, h: float, sigma: complex = 0.0, mode: str = "twogrid",
                  resolution: int = 256, **twogrid) -> list:
    """List of ``(w, factor)`` rows for ``mode`` in {'smoothing', 'twogrid'}."""
    w_grid = [float(w) for w in w_grid]
    if not w_grid:
        raise ValueError("empty damping grid")
    rows = []
    for w in w_grid:
        if mode == "smoothing":
            f = smoothing_factor(kind, w, h, sigma, resolution)
        elif mode == "twogrid":
            f = twogrid_factor(TwoGridConfig(kind=kind, w=w, h=h, sigma=sigma, resolution=resolution, **twogrid))
        else:
            raise ValueError(f"unknown mode {mode!r}")
        rows.append((w, f))
    return rows


def optimal_damping(rows) -> tuple:
    """Row with the smallest factor; ties go to the smaller damping."""
    return min(rows, key=lambda r: (r[1], r[0]))


def sigma_for_ppw(h: float, ppw: float = 10.0, kappa_sq: float = 1.0) -> float:
    """``kappa^2 omega^2`` with ``omega = 2 pi / (ppw h)``."""
    return kappa_sq * (2 * np.pi / (ppw * h)) ** 2
