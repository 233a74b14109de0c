# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stencil kernels: red-black Gauss-Seidel sweeps and the
periodic 5-point Laplacian. Semantics match mgsr.kernels.numpy_backend."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def gs_sweeps(double[:, ::1] p, double[:, ::1] f, double h2, int sweeps):
    """In-place red-black Gauss-Seidel with per-sweep mean subtraction."""
    cdef Py_ssize_t n = p.shape[0]
    if n % 2 != 0:
        raise ValueError(f"red-black coloring needs an even side, got {n}")
    if f.shape[0] != n or f.shape[1] != n:
        raise ValueError("p and f shapes differ")

    cdef Py_ssize_t i, j, im1, ip1, jm1, jp1, j0, s
    cdef int color
    cdef double nb, mean, acc
    cdef double inv_n2 = 1.0 / (<double> (n * n))

    for s in range(sweeps):
        # For even n each cell's four neighbors have the opposite color, so
        # updating one color in place never reads a cell updated this pass.
        for color in range(2):
            for i in range(n):
                im1 = i - 1 if i > 0 else n - 1
                ip1 = i + 1 if i < n - 1 else 0
                j0 = (i + color) % 2
                for j in range(j0, n, 2):
                    jm1 = j - 1 if j > 0 else n - 1
                    jp1 = j + 1 if j < n - 1 else 0
                    nb = ((p[im1, j] + p[ip1, j]) + p[i, jm1]) + p[i, jp1]
                    p[i, j] = (nb - h2 * f[i, j]) * 0.25
        acc = 0.0
        for i in range(n):
            for j in range(n):
                acc += p[i, j]
        mean = acc * inv_n2
        for i in range(n):
            for j in range(n):
                p[i, j] -= mean


def laplacian(double[:, ::1] p, double inv_h2):
    """Periodic 5-point Laplacian: (sum of 4 neighbors - 4p) * inv_h2."""
    cdef Py_ssize_t n = p.shape[0]
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, im1, ip1, jm1, jp1
    cdef double nb
    for i in range(n):
        im1 = i - 1 if i > 0 else n - 1
        ip1 = i + 1 if i < n - 1 else 0
        for j in range(n):
            jm1 = j - 1 if j > 0 else n - 1
            jp1 = j + 1 if j < n - 1 else 0
            nb = ((p[im1, j] + p[ip1, j]) + p[i, jm1]) + p[i, jp1]
            out[i, j] = (nb - 4.0 * p[i, j]) * inv_h2
    return out_arr
