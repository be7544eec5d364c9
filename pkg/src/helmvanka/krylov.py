"""Restarted flexible GMRES and convergence bookkeeping."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np


class BreakdownError(RuntimeError):
    """Numerical breakdown of the Arnoldi process."""


@dataclass
class SolveReport:
    iterations: int
    residual_history: list = field(default_factory=list)
    converged: bool = False
    c_f: float = float("nan")
    wall_time: float = 0.0
    final_residual: float = float("nan")
    restarts: int = 0
    cycle_starts: list = field(default_factory=list)


def _as_apply(op):
    if op is None:
        return lambda v: v.copy()
    if callable(op):
        return op
    if hasattr(op, "matvec"):
        return op.matvec
    return lambda v: op @ v


def _givens(a, b):
    """Complex Givens rotation (c real) zeroing ``b`` against ``a``."""
    if b == 0:
        return 1.0, 0.0, a
    if a == 0:
        return 0.0, np.conj(b) / abs(b), abs(b)
    t = np.hypot(abs(a), abs(b))
    c = abs(a) / t
    phase = a / abs(a)
    s = phase * np.conj(b) / t
    return c, s, phase * t


def fgmres(A, M, q, restart: int = 5, tol: float = 1e-6, maxiter: int = 500, u0=None):
    """Right-preconditioned restarted flexible GMRES.

    Parameters
    ----------
    A : callable or operator with ``matvec``
        System operator.
    M : callable or None
        Preconditioner applied to a residual-like vector; may vary between
        applications.
    q : ndarray
        Right-hand side.
    restart : int
        Krylov subspace length per restart cycle.
    tol : float
        Target relative residual ``||q - A u|| / ||q||``.
    maxiter : int
        Maximum number of preconditioner applications.
    u0 : ndarray, optional
        Initial guess (zero by default).

    Returns
    -------
    u : ndarray
    report : SolveReport
        ``iterations`` counts preconditioner applications.  The residual
        history holds the initial relative residual followed by one Arnoldi
        estimate per iteration.
    """
    if restart < 1:
        raise ValueError("restart must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    t0 = time.perf_counter()
    apply_A, apply_M = _as_apply(A), _as_apply(M)
    q = np.asarray(q, dtype=complex)
    shape = q.shape
    b = q.ravel()
    u = np.zeros_like(b) if u0 is None else np.array(u0, dtype=complex).ravel()
    qn = np.linalg.norm(b)
    if qn == 0:
        return np.zeros(shape, dtype=complex), SolveReport(0, [0.0], True, float("nan"), 0.0, 0.0)

    def Amul(v):
        return np.asarray(apply_A(v.reshape(shape))).ravel()

    def Mmul(v):
        return np.asarray(apply_M(v.reshape(shape))).ravel()

    r = b - Amul(u)
    beta = np.linalg.norm(r)
    history = [beta / qn]
    report = SolveReport(0, history)
    iterations = 0
    converged = beta / qn < tol

    while not converged and iterations < maxiter:
        report.cycle_starts.append(len(history) - 1)
        m = restart
        V = np.zeros((m + 1, b.size), dtype=complex)
        Z = np.zeros((m, b.size), dtype=complex)
        Hh = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        V[0] = r / beta
        g[0] = beta
        j_done = 0
        happy = False
        for j in range(m):
            Z[j] = Mmul(V[j])
            w = Amul(Z[j])
            iterations += 1
            wnorm0 = np.linalg.norm(w)
            for i in range(j + 1):
                Hh[i, j] = np.vdot(V[i], w)
                w -= Hh[i, j] * V[i]
            hnext = np.linalg.norm(w)
            Hh[j + 1, j] = hnext
            for i in range(j):
                h0, h1 = Hh[i, j], Hh[i + 1, j]
                Hh[i, j] = cs[i] * h0 + sn[i] * h1
                Hh[i + 1, j] = -np.conj(sn[i]) * h0 + cs[i] * h1
            cs[j], sn[j], Hh[j, j] = _givens(Hh[j, j], Hh[j + 1, j])
            Hh[j + 1, j] = 0.0
            g[j + 1] = -np.conj(sn[j]) * g[j]
            g[j] = cs[j] * g[j]
            if abs(Hh[j, j]) <= 1e-14 * max(wnorm0, 1e-300):
                raise BreakdownError(f"singular Hessenberg matrix at iteration {iterations}")
            history.append(abs(g[j + 1]) / qn)
            j_done = j + 1
            if hnext <= 1e-14 * max(wnorm0, 1e-300):
                happy = True
                break
            V[j + 1] = w / hnext
            if history[-1] < tol or iterations >= maxiter:
                break
        y = np.linalg.solve(np.triu(Hh[:j_done, :j_done]), g[:j_done])
        u = u + Z[:j_done].T @ y
        r = b - Amul(u)
        beta = np.linalg.norm(r)
        report.restarts += 1
        converged = beta / qn < tol or (happy and beta / qn < max(tol, 1e-10))
        if beta == 0:
            converged = True
        if not np.isfinite(beta):
            break

    report.iterations = iterations
    report.converged = bool(converged)
    report.final_residual = float(beta / qn)
    report.wall_time = time.perf_counter() - t0
    if len(history) > 6:
        report.c_f = convergence_factor(history)
    return u.reshape(shape), report


def convergence_factor(history, warmup: int = 5) -> float:
    """Average residual reduction per iteration after ``warmup`` iterations."""
    h = np.asarray(history, dtype=float)
    if h.size <= warmup + 1:
        raise ValueError(f"history of length {h.size} is too short for warm-up {warmup}")
    k = h.size - 1
    if h[warmup] == 0:
        return 0.0
    return float((h[k] / h[warmup]) ** (1.0 / (k - warmup)))
