"""Reference values for fractional substantial integrals and derivatives.

Two routes: the closed form for ``e^{-sigma (x-a)} (x-a)^nu`` and adaptive
Gauss-Legendre quadrature of the defining singular integral.
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma, rgamma

from .errors import ConvergenceError, DomainError, PreconditionError


_POLE_SNAP = 1e-12


def recip_gamma(z: float) -> float:
    """1/Gamma(z), exactly 0 at (and within rounding of) z = 0, -1, -2, ..."""
    k = round(z)
    if k <= 0 and abs(z - k) <= _POLE_SNAP * max(1.0, abs(z)):
        return 0.0
    return float(rgamma(z))


@dataclass(frozen=True)
class PowerExpFunction:
    """f(x) = coef * exp(-sigma (x - a)) * (x - a)**nu for x > a, zero for x <= a."""

    nu: float
    sigma: float
    a: float = 0.0
    coef: float = 1.0

    def __post_init__(self):
        if not self.nu > -1 and self.coef != 0:
            raise DomainError(f"nu must exceed -1 for integrability, got {self.nu}")

    def __call__(self, x):
        t = np.asarray(x, dtype=float) - self.a
        safe = np.where(t > 0, t, 1.0)
        val = np.where(t > 0, self.coef * np.exp(-self.sigma * safe) * safe ** self.nu, 0.0)
        return val if val.ndim else float(val)

    def right_limit(self) -> float:
        """Limit of f(x) as x decreases to a (the zero extension hides it)."""
        if self.coef == 0 or self.nu > 0:
            return 0.0
        return self.coef if self.nu == 0 else math.copysign(math.inf, self.coef)

    def transformed(self, mu: float) -> PowerExpFunction:
        """D_s^mu of this function (mu < 0: integral of order -mu), closed form."""
        r = recip_gamma(self.nu + 1 - mu)
        if r == 0.0:
            return PowerExpFunction(0.0, self.sigma, self.a, 0.0)
        return PowerExpFunction(self.nu - mu, self.sigma, self.a, self.coef * gamma(self.nu + 1) * r)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_refinements: int = 30

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_refinements < 1:
            raise DomainError("max_refinements must be at least 1")


DEFAULT_CONFIG = QuadratureConfig()


def power_exp_transform(f: PowerExpFunction, mu: float, x: float) -> float:
    """D_s^mu f(x) in closed form; mu < 0 gives the integral of order -mu.

    Gamma(nu+1)/Gamma(nu+1-mu) (x-a)^(nu-mu) e^{-sigma(x-a)}, with the
    reciprocal Gamma taken as exactly 0 at its poles.
    """
    if not x > f.a:
        raise DomainError(f"x must exceed the lower terminal {f.a}")
    if mu == 0:
        return float(f(x))
    t = x - f.a
    r = recip_gamma(f.nu + 1 - mu)
    if r == 0.0:
        return 0.0
    return float(f.coef * gamma(f.nu + 1) * r * t ** (f.nu - mu) * math.exp(-f.sigma * t))


# -- adaptive Gauss-Legendre ------------------------------------------------

_PANEL_POINTS = 15


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel(F, lo, hi):
    x, w = _gauss_legendre(_PANEL_POINTS)
    half = 0.5 * (hi - lo)
    return half * float(np.dot(w, F(lo + half * (x + 1.0))))


def adaptive_gauss_legendre(F: Callable, lo: float, hi: float, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Integrate vectorized ``F`` over [lo, hi]; returns (value, error_estimate).

    Globally adaptive bisection: the panel with the largest local error
    (coarse panel vs. its two halves) is split until the summed error meets
    ``max(abs_tol, rel_tol*|I|)``.  No panel is split more than
    ``max_refinements`` times.
    """
    if hi == lo:
        return 0.0, 0.0

    def node(a, b, depth):
        whole = _panel(F, a, b)
        mid = 0.5 * (a + b)
        left, right = _panel(F, a, mid), _panel(F, mid, b)
        fine = left + right
        return (-abs(fine - whole), a, b, depth, fine)

    heap = [node(lo, hi, 0)]
    total = heap[0][4]
    err = -heap[0][0]
    frozen = []
    while err > max(cfg.abs_tol, cfg.rel_tol * abs(total)):
        if not heap:
            raise ConvergenceError(
                f"quadrature error {err:.3e} above tolerance after {cfg.max_refinements} refinements",
                estimate=total,
                error_bound=err,
            )
        item = heapq.heappop(heap)
        neg_err, a, b, depth, fine = item
        if depth >= cfg.max_refinements:
            frozen.append(item)
            continue
        mid = 0.5 * (a + b)
        children = node(a, mid, depth + 1), node(mid, b, depth + 1)
        for child in children:
            heapq.heappush(heap, child)
        total += children[0][4] + children[1][4] - fine
        err += neg_err - children[0][0] - children[1][0]
    parts = heap + frozen
    return math.fsum(item[4] for item in parts), math.fsum(-item[0] for item in parts)


def singular_quadrature(
    f: Callable,
    nu: float,
    sigma: float,
    a: float,
    x: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """I_s^nu f(x) = 1/Gamma(nu) int_a^x (x-t)^(nu-1) e^{-sigma(x-t)} f(t) dt.

    For 0 < nu < 1 the substitution t = x - u^(1/nu) removes the kernel
    singularity and leaves (1/Gamma(nu+1)) int_0^{(x-a)^nu} e^{-sigma u^(1/nu)}
    f(x - u^(1/nu)) du.  ``f`` must accept NumPy arrays.
    """
    if not nu > 0:
        raise DomainError(f"integral order must be positive, got {nu}")
    if not x > a:
        raise DomainError(f"x must exceed the lower terminal {a}")
    length = x - a
    if nu < 1:
        inv = 1.0 / nu

        def F(u):
            s = np.power(u, inv)
            return np.exp(-sigma * s) * f(x - s)

        val, _ = adaptive_gauss_legendre(F, 0.0, length ** nu, cfg)
        return val * float(rgamma(nu + 1))

    def G(t):
        d = x - t
        return np.power(d, nu - 1) * np.exp(-sigma * d) * f(t)

    val, _ = adaptive_gauss_legendre(G, a, x, cfg)
    return val * float(rgamma(nu))


def _at_terminal(F, a: float) -> float:
    if isinstance(F, PowerExpFunction) and F.a == a:
        return F.right_limit()
    return float(F(a))


def substantial_derivative_quadrature(
    f: Callable,
    df_list: Sequence[Callable],
    mu: float,
    sigma: float,
    a: float,
    x: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """D_s^mu f(x) through its Caputo form plus boundary terms.

    ``df_list[k-1]`` is D_s^k f = (d/dx + sigma)^k f for k = 1..m with
    m = ceil(mu).  Values at ``a`` are right limits: a PowerExpFunction
    supplies its own, other callables are evaluated at ``a``.  The result is I_s^{m-mu}[D_s^m f](x) plus
    sum_{k<m} D_s^k f(a) (x-a)^(k-mu) e^{-sigma(x-a)} / Gamma(k-mu+1).
    """
    if not mu > 0:
        raise DomainError(f"derivative order must be positive, got {mu}")
    if not x > a:
        raise DomainError(f"x must exceed the lower terminal {a}")
    m = math.ceil(mu)
    if len(df_list) < m:
        raise PreconditionError(f"order {mu} needs D_s^k f for k = 1..{m}, got {len(df_list)}")
    derivs = [f, *df_list[:m]]
    nu = m - mu
    if nu == 0:
        # boundary terms carry 1/Gamma(k - m + 1) = 0
        return float(derivs[m](x))
    value = singular_quadrature(derivs[m], nu, sigma, a, x, cfg)
    t = x - a
    damp = math.exp(-sigma * t)
    for k in range(m):
        r = recip_gamma(k - mu + 1)
        if r != 0.0:
            value += _at_terminal(derivs[k], a) * t ** (k - mu) * damp * r
    return float(value)
