"""Starting-weight corrections for data of the form x^(beta-1) g(x).

Each row n of correction weights kappa_{n,1..r} makes the corrected scheme

    h^{-alpha} [ sum_{j=0}^{n} g_{n-j} f_j + sum_{j=1}^{r} kappa_{n,j} f_j ]

exact at x_n for every f = e^{-sigma t} t^{q+beta-1}, q = 0..r-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
import scipy.linalg
from scipy.special import gamma

from . import _backend
from .errors import ConditioningError, DomainError, PreconditionError
from .gridops import GridFunction, _check_spacing, apply
from .oracle import recip_gamma
from .weights import FIXED_BITS, OperatorSpec, untwisted_fixed_point, weights

MAX_CORRECTIONS = 8
_COND_LIMIT = 1e12


def default_correction_count(p: int, beta: float) -> int:
    """Number m of correction nodes with m + beta - 1 <= p < m + beta."""
    return max(0, math.floor(p - beta + 1))


def power_samples(exponent: float, n: int) -> np.ndarray:
    """j**exponent for j = 0..n, with the j = 0 sample taken as 0 when exponent != 0."""
    j = np.arange(n + 1, dtype=float)
    out = np.empty(n + 1)
    out[1:] = j[1:] ** exponent
    out[0] = 1.0 if exponent == 0 else 0.0
    return out


def error_functional(spec: OperatorSpec, exponent: float, n: int) -> float:
    """Uncorrected scheme minus exact value for e^{-sigma t} t^exponent at x = n h."""
    if not exponent > -1:
        raise DomainError(f"exponent must exceed -1, got {exponent}")
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    h, s = spec.h, spec.sigma
    x = h * np.arange(n + 1)
    f = np.exp(-s * x) * power_samples(exponent, n) * h ** exponent
    g = weights(spec, n).g
    approx = h ** (-spec.alpha) * float(np.dot(g[::-1], f))
    r = recip_gamma(exponent + 1 - spec.alpha)
    exact = 0.0 if r == 0.0 else gamma(exponent + 1) * r * (n * h) ** (exponent - spec.alpha) * math.exp(-s * n * h)
    return approx - exact


_LD = np.longdouble


def _ld(x) -> np.longdouble:
    # np.longdouble(str) may parse through double, so go via a hi/lo split
    hi = float(x)
    return _LD(hi) + _LD(float(x - hi))


def _untwisted_extended(alpha: float, p: int, n: int) -> np.ndarray:
    # sigma = 0 weights to long double accuracy; the rows below cancel ~n^(q+beta) digits
    with mpmath.workprec(FIXED_BITS + 64):
        scale = mpmath.mpf(2) ** -FIXED_BITS
        return np.array([_ld(mpmath.mpf(w) * scale) for w in untwisted_fixed_point(alpha, p, n)], dtype=_LD)


def _untwisted_rows(alpha: float, p: int, exps, n: int) -> np.ndarray:
    """Rows -E(n) for sigma = 0 in long double, one per exponent, n = 0..N.

    With g_m = e^{-sigma m h} l_m and samples e^{-sigma j h} j^e every term
    of row n carries e^{-sigma n h}, so the sigma rows are these times that
    factor.
    """
    l = _untwisted_extended(alpha, p, n)
    k = np.arange(n + 1, dtype=_LD)
    out = np.zeros((len(exps), n + 1), dtype=_LD)
    for q, e in enumerate(exps):
        samples = np.zeros(n + 1, dtype=_LD)
        samples[1:] = k[1:] ** _LD(e)
        if e == 0:
            samples[0] = 1
        conv = np.convolve(l, samples)[: n + 1]
        exact = np.zeros(n + 1, dtype=_LD)
        if recip_gamma(e + 1 - alpha) != 0.0:
            # exponent sums formed exactly; a rounded e - alpha costs ~ln(n) eps n^(e-alpha)
            with mpmath.workdps(30):
                me, ma = mpmath.mpf(e), mpmath.mpf(alpha)
                ratio = mpmath.gamma(me + 1) * mpmath.rgamma(me + 1 - ma)
                expo = _ld(me - ma)
            exact[1:] = _ld(ratio) * k[1:] ** expo
        out[q] = exact - conv
    out[:, 0] = 0
    return out


@dataclass(frozen=True)
class StartingWeightSet:
    """kappa[n, j-1] = kappa_{n,j}; row 0 is unused and zero."""

    spec: OperatorSpec
    beta: float
    r: int
    kappa: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.kappa.setflags(write=False)
        self.residuals.setflags(write=False)

    @property
    def N(self) -> int:
        return self.kappa.shape[0] - 1

    @property
    def exponents(self) -> np.ndarray:
        return self.beta - 1 + np.arange(self.r)


def _validate_beta(spec: OperatorSpec, beta: float):
    if beta <= 0 and float(beta).is_integer():
        raise DomainError(f"beta must not be 0, -1, -2, ...; got {beta}")
    if spec.alpha > 0 and not beta > math.ceil(spec.alpha):
        raise DomainError(f"derivative of order {spec.alpha} needs beta > {math.ceil(spec.alpha)}, got {beta}")


def starting_weights(spec: OperatorSpec, beta: float, r: int | None = None, N: int = 0) -> StartingWeightSet:
    """Solve, for every row n = 1..N, the r x r system

        sum_j kappa_{n,j} e^{-sigma j h} j^{q+beta-1}
            = e^{-sigma n h} Gamma(q+beta)/Gamma(q+beta-alpha) n^{q+beta-1-alpha}
              - sum_{j=0}^{n} g_{n-j} e^{-sigma j h} j^{q+beta-1},   q = 0..r-1.

    The matrix does not depend on n, so one row-equilibrated LU
    factorization serves all rows.
    """
    _validate_beta(spec, beta)
    if r is None:
        r = default_correction_count(spec.p, beta)
    if r < 1:
        raise DomainError(f"need at least one correction node, got r = {r}")
    if r > MAX_CORRECTIONS:
        raise ConditioningError(f"r = {r} exceeds {MAX_CORRECTIONS}; the node system is too ill-conditioned")
    if N < 1:
        raise DomainError(f"N must be at least 1, got {N}")

    h, s = spec.h, spec.sigma
    j = np.arange(1, r + 1, dtype=float)
    exps = beta - 1 + np.arange(r)
    V = np.exp(-s * h * j)[None, :] * j[None, :] ** exps[:, None]
    scale = 1.0 / np.max(np.abs(V), axis=1)
    Vs = V * scale[:, None]
    cond = np.linalg.cond(Vs)
    if not cond < _COND_LIMIT:
        raise ConditioningError(f"starting-weight system condition number {cond:.2e}")

    damp = np.exp(-s * h * np.arange(N + 1))
    B = damp * _untwisted_rows(spec.alpha, spec.p, exps, N).astype(float)

    lu = scipy.linalg.lu_factor(Vs)
    K = scipy.linalg.lu_solve(lu, B * scale[:, None])
    resid = np.abs(V @ K - B)
    rel = np.max(resid, axis=0) / np.maximum(np.max(np.abs(B), axis=0), np.finfo(float).tiny)
    rel[0] = 0.0
    return StartingWeightSet(spec, float(beta), int(r), np.ascontiguousarray(K.T), rel)


def _check_set(spec: OperatorSpec, sws: StartingWeightSet, n: int):
    if sws.spec != spec:
        raise PreconditionError("starting weights were built for a different operator")
    if n > sws.N:
        raise PreconditionError(f"starting weights cover {sws.N} rows, grid has {n}")


def corrected_apply(spec: OperatorSpec, sws: StartingWeightSet, f: GridFunction) -> GridFunction:
    _check_spacing(spec, f)
    _check_set(spec, sws, f.N)
    base = apply(spec, f).values
    n, r = f.N, sws.r
    head = np.zeros(r)
    m = min(r, n)
    head[:m] = f.values[1 : m + 1]
    corr = sws.kappa[: n + 1] @ head
    return f.like(base + spec.h ** (-spec.alpha) * corr)


def corrected_solve(spec: OperatorSpec, sws: StartingWeightSet, rhs: GridFunction, f0: float) -> GridFunction:
    """Invert the corrected scheme for f given f_0.

    Rows 1..r couple f_1..f_r through both the convolution and the
    correction, so that block is solved densely; the remaining rows are
    forward substitution with the (now known) correction moved to the
    right-hand side.
    """
    _check_spacing(spec, rhs)
    _check_set(spec, sws, rhs.N)
    n, r = rhs.N, sws.r
    g = np.ascontiguousarray(weights(spec, n).g)
    K = sws.kappa
    b = spec.h ** spec.alpha * rhs.values
    f = np.zeros(n + 1)
    f[0] = f0
    if n == 0:
        return rhs.like(f)

    m = min(r, n)
    rows = np.arange(1, m + 1)
    M = np.zeros((m, m))
    for i, row in enumerate(rows):
        M[i, : row] = g[row - np.arange(1, row + 1)]
        M[i, :] += K[row, :m]
    lead_b = b[1 : m + 1] - g[1 : m + 1] * f0
    cond = np.linalg.cond(M)
    if not cond < _COND_LIMIT:
        raise ConditioningError(f"leading block condition number {cond:.2e}")
    f[1 : m + 1] = scipy.linalg.solve(M, lead_b)

    if n > m:
        head = np.zeros(r)
        head[:m] = f[1 : m + 1]
        b_rest = b - K[: n + 1] @ head
        _backend.lower_toeplitz_solve(g, np.ascontiguousarray(b_rest), f, m + 1)
    return rhs.like(f)
