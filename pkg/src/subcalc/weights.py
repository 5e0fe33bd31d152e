"""Convolution quadrature weights for the fractional substantial operators.

The weights of order ``p`` are the power-series coefficients of

    (sum_{i=1}^p (1/i) (1 - exp(-sigma*h) z)**i) ** alpha

and factor as ``g_m = exp(-sigma*m*h) * l_m`` where ``l_m`` are the
sigma = 0 (fractional BDF) weights.  ``alpha > 0`` selects a derivative,
``alpha < 0`` an integral of order ``-alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import _backend
from .errors import ConvergenceError, DomainError

MAX_ORDER = 5


@dataclass(frozen=True)
class OperatorSpec:
    """Which discrete operator is meant: order, damping, scheme order, step."""

    alpha: float
    sigma: float
    p: int
    h: float

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise DomainError(f"alpha must be finite, got {self.alpha}")
        if not math.isfinite(self.sigma):
            raise DomainError(f"sigma must be finite, got {self.sigma}")
        if isinstance(self.p, bool) or int(self.p) != self.p or not 1 <= self.p <= MAX_ORDER:
            raise DomainError(f"p must be an integer in 1..{MAX_ORDER}, got {self.p}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise DomainError(f"h must be positive, got {self.h}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "h", float(self.h))

    @property
    def is_integral(self) -> bool:
        return self.alpha < 0

    def with_h(self, h: float) -> OperatorSpec:
        return OperatorSpec(self.alpha, self.sigma, self.p, h)

    def inverse(self) -> OperatorSpec:
        """The spec whose weights are the convolution inverse of these."""
        return OperatorSpec(-self.alpha, self.sigma, self.p, self.h)


@dataclass(frozen=True)
class GeneratingPolynomial:
    """Exact coefficients of sum_{i=1}^p (1/i)(1 - w)^i in powers of w."""

    p: int
    coeffs: tuple[Fraction, ...]

    @property
    def u0(self) -> Fraction:
        return self.coeffs[0]

    def as_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])


def generating_polynomial(p: int) -> GeneratingPolynomial:
    if isinstance(p, bool) or int(p) != p or not 1 <= p <= MAX_ORDER:
        raise DomainError(f"p must be an integer in 1..{MAX_ORDER}, got {p}")
    p = int(p)
    coeffs = [Fraction(0)] * (p + 1)
    for i in range(1, p + 1):
        for k in range(i + 1):
            coeffs[k] += Fraction((-1) ** k * math.comb(i, k), i)
    return GeneratingPolynomial(p, tuple(coeffs))


@dataclass(frozen=True)
class WeightTable:
    spec: OperatorSpec
    g: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.g.setflags(write=False)

    def __len__(self):
        return self.g.shape[0]

    @property
    def N(self) -> int:
        return self.g.shape[0] - 1


def _untwisted(alpha: float, p: int, n: int) -> np.ndarray:
    if alpha == 0.0:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    u = np.ascontiguousarray(generating_polynomial(p).as_float())
    return _backend.lubich_recurrence(u, float(alpha), int(n))


def weights(spec: OperatorSpec, N: int) -> WeightTable:
    """Weights g_0..g_N for ``spec``.

    The sigma = 0 weights come from the power-series exponentiation
    recurrence ``w_m = sum_{k=1}^{min(m,p)} (k(alpha+1) - m) u_k w_{m-k} / (m u_0)``
    and are then twisted by ``exp(-sigma*m*h)``.
    """
    if N < 0:
        raise DomainError(f"N must be non-negative, got {N}")
    l = _untwisted(spec.alpha, spec.p, N)
    if spec.sigma != 0.0:
        l = l * np.exp(-spec.sigma * spec.h * np.arange(N + 1))
    return WeightTable(spec, l)


# -- consistency ------------------------------------------------------------

FIXED_BITS = 160


def default_truncation(h: float) -> int:
    # exp(-60) keeps the neglected tail ~1e-26 even for integrals of order 1.5
    return max(1000, math.ceil(60.0 / h))


def untwisted_fixed_point(alpha: float, p: int, n: int) -> list[int]:
    """sigma = 0 weights l_0..l_n as integers scaled by 2**FIXED_BITS.

    Coefficients of the recurrence are exact rationals (a binary float alpha
    is one), so only w_0 = u_0**alpha is rounded; later rounding is one unit
    of 2**-FIXED_BITS per step.
    """
    poly = generating_polynomial(p)
    a = Fraction(alpha)
    denom = 1
    for c in poly.coeffs:
        denom = math.lcm(denom, c.denominator)
    denom *= (a + 1).denominator
    num_k = [int((a + 1) * k * c * denom) for k, c in enumerate(poly.coeffs)]
    den_k = [int(c * denom) for c in poly.coeffs]
    u0 = den_k[0]
    with mpmath.workprec(FIXED_BITS + 64):
        w0 = int(mpmath.power(mpmath.mpf(poly.u0.numerator) / poly.u0.denominator,
                              mpmath.mpf(alpha)) * (1 << FIXED_BITS))
    w = [w0]
    for m in range(1, n + 1):
        s = 0
        for k in range(1, min(m, p) + 1):
            s += (num_k[k] - m * den_k[k]) * w[m - k]
        w.append(s // (m * u0))
    return w


def _twisted_sum_fixed_point(alpha: float, p: int, h: float, n: int):
    """sum_{m=0}^n l_m exp(-m h) and the last term, in fixed point."""
    one = 1 << FIXED_BITS
    with mpmath.workprec(FIXED_BITS + 64):
        z = int(mpmath.exp(-mpmath.mpf(h)) * one)
    w = untwisted_fixed_point(alpha, p, n)
    total = w[0]
    zm = one
    term = w[0]
    for wm in w[1:]:
        zm = (zm * z) >> FIXED_BITS
        term = (wm * zm) >> FIXED_BITS
        total += term
    with mpmath.workprec(FIXED_BITS + 64):
        return mpmath.mpf(total) / one, mpmath.mpf(term) / one


def _tail_bound(last_term: float, alpha: float, h: float, n: int) -> float:
    # terms behave like m**(-alpha-1) exp(-m h) for large m
    growth = max(0.0, -alpha - 1.0)
    j = np.arange(1, max(16, math.ceil(80.0 / h)) + 1)
    return abs(last_term) * float(np.sum((1.0 + j / n) ** growth * np.exp(-h * j)))


def consistency_defect(spec: OperatorSpec, N: int | None = None, precision: str = "extended") -> float:
    """|h^{-alpha} kappa(e^{sigma h} e^{-h}) - 1| for the weights of ``spec``.

    With ``g_m = e^{-sigma m h} l_m`` the twist cancels exactly at this
    argument, so the sum is ``sum_m l_m e^{-m h}``.  ``precision="extended"``
    runs the weight recurrence in fixed point so that defects far below
    double round-off (order 5 at small h) are resolved; ``"double"`` uses
    the ordinary float weights.
    """
    if spec.alpha == 0.0:
        return 0.0
    n = default_truncation(spec.h) if N is None else int(N)
    if precision == "extended":
        total, last = _twisted_sum_fixed_point(spec.alpha, spec.p, spec.h, n)
        with mpmath.workprec(FIXED_BITS + 64):
            defect = float(abs(mpmath.mpf(spec.h) ** (-spec.alpha) * total - 1))
        last = float(last)
    elif precision == "double":
        l = _untwisted(spec.alpha, spec.p, n)
        terms = l * np.exp(-spec.h * np.arange(n + 1))
        defect = abs(spec.h ** (-spec.alpha) * math.fsum(terms) - 1.0)
        last = float(terms[-1])
    else:
        raise DomainError(f"unknown precision {precision!r}")

    tail = _tail_bound(last, spec.alpha, spec.h, n) * spec.h ** (-spec.alpha)
    if tail > 1e-30 and tail > 1e-3 * defect:
        raise ConvergenceError(
            f"truncated series tail ~{tail:.3e} dominates defect {defect:.3e}; increase N",
            estimate=defect,
            error_bound=tail,
        )
    return defect
