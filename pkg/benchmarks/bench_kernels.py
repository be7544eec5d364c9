"""Compare the compiled stencil kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 20]

Times a Helmholtz matrix-vector product and one multigrid cycle with each
backend.  The numpy timings of the cycle come from a subprocess started with
``HELMVANKA_PURE=1``, since the backend is fixed at import.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from helmvanka import kernels

CASES = [(2, 256), (2, 1024), (3, 48), (3, 96)]


def _operator(dim, n):
    from helmvanka.helmholtz import apply_shift
    from helmvanka.bench.experiment import ExperimentConfig, build_problem

    prob = build_problem(ExperimentConfig(dim=dim, cells=(n,) * dim, abc_width=min(20, n // 8)))
    return prob, apply_shift(prob.H, prob.M, 0.5, prob.omega)


def bench_matvec(repeat):
    rows = []
    rng = np.random.default_rng(0)
    for dim, n in CASES:
        _, A = _operator(dim, n)
        u = rng.standard_normal(A.shape) + 1j * rng.standard_normal(A.shape)
        coeffs = np.ascontiguousarray(A.coeffs)
        offs = np.ascontiguousarray(A.offsets, dtype=np.int64)
        out = np.zeros(A.shape, dtype=complex)
        row = {"case": f"matvec {dim}D {n}", "unknowns": u.size}
        impls = {"numpy": kernels.stencil_apply_numpy}
        if kernels.BACKEND == "compiled":
            impls["compiled"] = kernels.stencil_apply_compiled
        for name, fn in impls.items():
            row[name] = min(timeit.repeat(lambda: fn(coeffs, offs, u, out), number=1, repeat=repeat))
        rows.append(row)
    return rows


def _cycle_time(repeat):
    from helmvanka.bench.experiment import ExperimentConfig, build_problem
    from helmvanka.multigrid import build_hierarchy, cycle

    cfg = ExperimentConfig(cells=(512, 512))
    prob = build_problem(cfg)
    hier = build_hierarchy(prob.H, prob.M, cfg.mg_config(), prob.omega)
    cycle(hier, prob.q)
    return min(timeit.repeat(lambda: cycle(hier, prob.q), number=1, repeat=repeat))


def bench_cycle(repeat):
    here = _cycle_time(repeat)
    env = dict(os.environ, HELMVANKA_PURE="1")
    code = (f"import sys; sys.path.insert(0, {os.path.dirname(__file__)!r}); "
            f"import bench_kernels as b; print(b._cycle_time({repeat}))")
    pure = float(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                check=True).stdout.strip())
    return {"case": "W-cycle 2D 512", kernels.BACKEND: here, "numpy": pure}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--json", default=None, help="also write the timings to this file")
    args = p.parse_args(argv)
    rows = bench_matvec(args.repeat) + [bench_cycle(max(3, args.repeat // 5))]
    print(f"backend: {kernels.BACKEND}")
    print(f"{'case':<20}{'numpy [ms]':>12}{'compiled [ms]':>15}{'speedup':>9}")
    for r in rows:
        c = r.get("compiled")
        speed = f"{r['numpy'] / c:8.2f}x" if c else "        -"
        cs = f"{1e3 * c:15.2f}" if c else f"{'-':>15}"
        print(f"{r['case']:<20}{1e3 * r['numpy']:12.2f}{cs}{speed}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
