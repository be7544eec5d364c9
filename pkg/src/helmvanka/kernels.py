"""Hot stencil kernels with a compiled core and a numpy fallback.

The compiled extension ``helmvanka._kernels`` is used when it imports; set
``HELMVANKA_PURE=1`` to force the numpy path.  Both paths share the contract

    stencil_apply(coeffs, offsets, u, out, scale)   out += scale * A u
    stencil_residual(coeffs, offsets, u, q)         returns q - A u

with ``coeffs`` of shape ``(K, *shape)`` and ``offsets`` of shape ``(K, ndim)``
in array-axis order.  Couplings that leave the array are skipped.
"""

from __future__ import annotations

import os

import numpy as np

try:
    if os.environ.get("HELMVANKA_PURE", "") not in ("", "0"):
        raise ImportError("pure mode requested")
    from . import _kernels as _ext
except ImportError:  # pragma: no cover - depends on the build
    _ext = None

BACKEND = "compiled" if _ext is not None else "numpy"


def _windows(offset, shape):
    """Destination and source slices for a shift by ``offset``."""
    dst, src = [], []
    for d, n in zip(offset, shape):
        d = int(d)
        if d >= 0:
            dst.append(slice(0, n - d))
            src.append(slice(d, n))
        else:
            dst.append(slice(-d, n))
            src.append(slice(0, n + d))
    return tuple(dst), tuple(src)


def stencil_apply_numpy(coeffs, offsets, u, out, scale=1.0):
    for k, off in enumerate(offsets):
        dst, src = _windows(off, u.shape)
        if scale == 1.0:
            out[dst] += coeffs[k][dst] * u[src]
        else:
            out[dst] += scale * (coeffs[k][dst] * u[src])
    return out


def stencil_residual_numpy(coeffs, offsets, u, q):
    out = np.array(q, dtype=complex, copy=True)
    return stencil_apply_numpy(coeffs, offsets, u, out, -1.0)


def _as3(coeffs, offsets, *arrays):
    ndim = offsets.shape[1]
    if ndim == 3:
        off3 = np.ascontiguousarray(offsets, dtype=np.int64)
        return coeffs, off3, arrays
    off3 = np.zeros((offsets.shape[0], 3), dtype=np.int64)
    off3[:, 3 - ndim:] = offsets
    shape3 = (1,) * (3 - ndim) + arrays[0].shape
    return (
        coeffs.reshape((coeffs.shape[0],) + shape3),
        off3,
        tuple(a.reshape(shape3) for a in arrays),
    )


def _ready(a):
    return a.dtype == np.complex128 and a.flags.c_contiguous


def stencil_apply_compiled(coeffs, offsets, u, out, scale=1.0):
    u = np.ascontiguousarray(u, dtype=complex)
    if not (_ready(out) and _ready(coeffs)):
        raise TypeError("compiled kernel needs C-contiguous complex128 arrays")
    c3, off3, (u3, out3) = _as3(coeffs, offsets, u, out)
    _ext.stencil_apply3(c3, off3, u3, out3, complex(scale))
    return out


def stencil_residual_compiled(coeffs, offsets, u, q):
    u = np.ascontiguousarray(u, dtype=complex)
    q = np.ascontiguousarray(q, dtype=complex)
    out = np.empty_like(q)
    c3, off3, (u3, q3, out3) = _as3(coeffs, offsets, u, q, out)
    _ext.stencil_residual3(c3, off3, u3, q3, out3)
    return out


if _ext is not None:
    stencil_apply = stencil_apply_compiled
    stencil_residual = stencil_residual_compiled
else:  # pragma: no cover
    stencil_apply = stencil_apply_numpy
    stencil_residual = stencil_residual_numpy
