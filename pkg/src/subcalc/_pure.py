"""Pure-Python/NumPy versions of the kernels in ``_kernels.pyx``."""

import numpy as np


def lubich_recurrence(u, alpha, n):
    u = [float(c) for c in u]
    p = len(u) - 1
    w = [0.0] * (n + 1)
    w[0] = u[0] ** alpha
    for m in range(1, n + 1):
        s = 0.0
        for k in range(1, min(m, p) + 1):
            s += (k * alpha + (k - m)) * u[k] * w[m - k]
        w[m] = s / (m * u[0])
    return np.array(w)


def lower_toeplitz_matvec(g, f):
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    if len(g) < n:
        raise ValueError("need at least len(f) weights")
    return np.convolve(np.asarray(g[:n], dtype=float), f)[:n]


def lower_toeplitz_solve(g, b, f, start):
    g = np.asarray(g, dtype=float)
    n = f.shape[0]
    if g.shape[0] < n or len(b) < n:
        raise ValueError("weights and right-hand side must cover the grid")
    for i in range(start, n):
        # g[1:i+1] pairs with f[i-1], ..., f[0]
        f[i] = (b[i] - np.dot(g[1 : i + 1], f[i - 1 :: -1] if i > 0 else f[:0])) / g[0]
