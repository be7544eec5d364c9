# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels (3D layout; 2D callers pass nz == 1)."""

cimport cython


def stencil_apply3(double complex[:, :, :, ::1] coeffs,
                   long long[:, ::1] offsets,
                   double complex[:, :, ::1] u,
                   double complex[:, :, ::1] out,
                   double complex scale):
    """out += scale * sum_k coeffs[k] * u[. + offsets[k]] (out-of-domain skipped)."""
    cdef Py_ssize_t K = coeffs.shape[0]
    cdef Py_ssize_t nz = u.shape[0], ny = u.shape[1], nx = u.shape[2]
    cdef Py_ssize_t k, z, y, x, dz, dy, dx
    cdef Py_ssize_t z0, z1, y0, y1, x0, x1
    cdef double complex c
    for k in range(K):
        dz = offsets[k, 0]
        dy = offsets[k, 1]
        dx = offsets[k, 2]
        z0 = -dz if dz < 0 else 0
        z1 = nz - dz if dz > 0 else nz
        y0 = -dy if dy < 0 else 0
        y1 = ny - dy if dy > 0 else ny
        x0 = -dx if dx < 0 else 0
        x1 = nx - dx if dx > 0 else nx
        for z in range(z0, z1):
            for y in range(y0, y1):
                for x in range(x0, x1):
                    out[z, y, x] = out[z, y, x] + scale * coeffs[k, z, y, x] * u[z + dz, y + dy, x + dx]


def stencil_residual3(double complex[:, :, :, ::1] coeffs,
                      long long[:, ::1] offsets,
                      double complex[:, :, ::1] u,
                      double complex[:, :, ::1] q,
                      double complex[:, :, ::1] out):
    """out = q - A u, one pass per node over all stencil entries."""
    cdef Py_ssize_t K = coeffs.shape[0]
    cdef Py_ssize_t nz = u.shape[0], ny = u.shape[1], nx = u.shape[2]
    cdef Py_ssize_t k, z, y, x, zz, yy, xx
    cdef double complex acc
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                acc = q[z, y, x]
                for k in range(K):
                    zz = z + offsets[k, 0]
                    yy = y + offsets[k, 1]
                    xx = x + offsets[k, 2]
                    if zz < 0 or zz >= nz or yy < 0 or yy >= ny or xx < 0 or xx >= nx:
                        continue
                    acc = acc - coeffs[k, z, y, x] * u[zz, yy, xx]
                out[z, y, x] = acc
