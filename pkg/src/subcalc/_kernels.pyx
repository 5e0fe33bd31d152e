# cython: language_level=3
"""Compiled inner loops: weight recurrence and lower-triangular Toeplitz ops."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def lubich_recurrence(const double[::1] u, double alpha, Py_ssize_t n):
    """Power-series coefficients w_0..w_n of u(z)**alpha, given w_0 = u[0]**alpha."""
    cdef Py_ssize_t p = u.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n + 1)
    cdef double[::1] w = out
    cdef Py_ssize_t m, k, kmax
    cdef double s, u0 = u[0]
    w[0] = u0 ** alpha
    with nogil:
        for m in range(1, n + 1):
            s = 0.0
            kmax = m if m < p else p
            for k in range(1, kmax + 1):
                # k*alpha + (k - m) avoids cancelling k*(alpha+1) against m
                s += (k * alpha + <double>(k - m)) * u[k] * w[m - k]
            w[m] = s / (m * u0)
    return out


cdef inline double _dot_rev(const double[::1] g, const double[::1] f, Py_ssize_t lo,
                            Py_ssize_t i) noexcept nogil:
    # sum_{m=lo}^{i} g_m f_{i-m}; four accumulators break the add dependency chain
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t m = lo
    while m + 3 <= i:
        s0 += g[m] * f[i - m]
        s1 += g[m + 1] * f[i - m - 1]
        s2 += g[m + 2] * f[i - m - 2]
        s3 += g[m + 3] * f[i - m - 3]
        m += 4
    while m <= i:
        s0 += g[m] * f[i - m]
        m += 1
    return (s0 + s1) + (s2 + s3)


def lower_toeplitz_matvec(const double[::1] g, const double[::1] f):
    """y_i = sum_{m=0}^{i} g_m f_{i-m} for i < len(f)."""
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t i
    if g.shape[0] < n:
        raise ValueError("need at least len(f) weights")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef double[::1] y = out
    with nogil:
        for i in range(n):
            y[i] = _dot_rev(g, f, 0, i)
    return out


def lower_toeplitz_solve(const double[::1] g, const double[::1] b, double[::1] f,
                         Py_ssize_t start):
    """Forward substitution in place: f_n = (b_n - sum_{j=1}^{n} g_j f_{n-j}) / g_0.

    Entries f_0..f_{start-1} are taken as known.
    """
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t i
    cdef double g0 = g[0]
    if g.shape[0] < n or b.shape[0] < n:
        raise ValueError("weights and right-hand side must cover the grid")
    with nogil:
        for i in range(start, n):
            f[i] = (b[i] - _dot_rev(g, f, 1, i)) / g0
