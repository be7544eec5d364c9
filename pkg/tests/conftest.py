"""Shared fixtures and dense reference implementations.

The oracles below build matrices entry by entry from the textbook formulas,
independently of the stencil machinery under test.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

# -- acceptance report -----------------------------------------------------------

_ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion."""

    def _record(number: int, ok: bool, detail: str):
        _ACCEPTANCE.append((number, bool(ok), detail))
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def crandn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# -- dense oracles ---------------------------------------------------------------

# compact fourth-order weights by number of nonzero offset components
LAP2 = {0: 10 / 3, 1: -2 / 3, 2: -1 / 6}
MASS2 = {0: 2 / 3, 1: 1 / 12}
LAP3 = {0: 4.0, 1: -1 / 3, 2: -1 / 6}
MASS3 = {0: 1 / 2, 1: 1 / 12}


def dense_helmholtz(shape, h, sigma, periodic=False):
    """Dense ``L - sigma M`` on a nodal array of ``shape`` (2D or 3D).

    ``sigma`` is a scalar or an array over the nodes (taken at the row node).
    """
    dim = len(shape)
    lap, mass = (LAP2, MASS2) if dim == 2 else (LAP3, MASS3)
    n = int(np.prod(shape))
    sig = np.broadcast_to(np.asarray(sigma, dtype=complex), shape).ravel()
    A = np.zeros((n, n), dtype=complex)
    for row, node in enumerate(np.ndindex(*shape)):
        for off in itertools.product((-1, 0, 1), repeat=dim):
            k = sum(map(abs, off))
            if k not in lap:
                continue
            nb = tuple(i + o for i, o in zip(node, off))
            if periodic:
                nb = tuple(j % s for j, s in zip(nb, shape))
            elif any(j < 0 or j >= s for j, s in zip(nb, shape)):
                continue
            col = int(np.ravel_multi_index(nb, shape))
            A[row, col] += lap[k] / h**2 - sig[row] * mass.get(k, 0.0)
    return A


def dense_restriction(kind, shape, periodic=False):
    """Dense tensor-product restriction from ``shape`` to the halved grid."""
    w1 = {"linear": np.array([1, 2, 1]) / 4, "cubic": np.array([1, 4, 6, 4, 1]) / 16}[kind]
    r = len(w1) // 2
    mats = []
    for nf in shape:
        nc = nf // 2 if periodic else (nf - 1) // 2 + 1
        R = np.zeros((nc, nf))
        for I in range(nc):
            for k in range(-r, r + 1):
                i = 2 * I + k
                if periodic:
                    R[I, i % nf] += w1[k + r]
                elif 0 <= i < nf:
                    R[I, i] += w1[k + r]
        mats.append(R)
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


# member offsets per kind in array-axis order, written out explicitly
PATCH_CATALOG = {
    2: {
        "jacobi": [(0, 0)],
        "element": [(0, 0), (0, 1), (1, 0), (1, 1)],
        "plus": [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)],
        "rb": [(0, 0), (-1, -1), (-1, 1), (1, -1), (1, 1)],
        "full": [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)],
    },
    3: {
        "jacobi": [(0, 0, 0)],
        "element": [(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1)],
        "plus": [(0, 0, 0)] + [tuple(s if a == ax else 0 for a in range(3)) for ax in range(3) for s in (-1, 1)],
        "rb": [o for o in itertools.product((-1, 0, 1), repeat=3) if sum(map(abs, o)) % 2 == 0],
        "full": list(itertools.product((-1, 0, 1), repeat=3)),
    },
}


def dense_patches(shape, kind, periodic=False):
    """Explicit list of patch node lists (linear indices)."""
    dim = len(shape)
    offs = PATCH_CATALOG[dim][kind]
    if kind == "element" and not periodic:
        anchors = itertools.product(*(range(s - 1) for s in shape))
    else:
        anchors = np.ndindex(*shape)
    patches = []
    for a in anchors:
        members = []
        for o in offs:
            nb = tuple(i + d for i, d in zip(a, o))
            if periodic:
                nb = tuple(j % s for j, s in zip(nb, shape))
            elif any(j < 0 or j >= s for j, s in zip(nb, shape)):
                continue
            members.append(int(np.ravel_multi_index(nb, shape)))
        patches.append(members)
    return patches


def dense_vanka_update(A, patches, n):
    """``sum_i V_i^T W_i H_i^{-1} V_i`` with ``W_i`` from patch counts."""
    count = np.zeros(n)
    for p in patches:
        count[p] += 1
    B = np.zeros((n, n), dtype=complex)
    for p in patches:
        Hi = A[np.ix_(p, p)]
        B[np.ix_(p, p)] += (1.0 / count[p])[:, None] * np.linalg.inv(Hi)
    return B


def dense_smoother(A, patches, w):
    """Error propagation ``I - w B A`` of one additive Vanka sweep."""
    n = A.shape[0]
    return np.eye(n) - w * dense_vanka_update(A, patches, n) @ A
