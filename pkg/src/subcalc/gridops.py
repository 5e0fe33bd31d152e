"""Apply and invert the discrete operators on uniform grids.

``apply`` evaluates h^{-alpha} sum_{m=0}^{i} g_m f_{i-m} at every node, which
approximates D_s^alpha f(x_i) (alpha > 0) or I_s^{-alpha} f(x_i) (alpha < 0)
for the zero-extended f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _backend
from .errors import DomainError, PreconditionError
from .weights import OperatorSpec, weights

_SPACING_RTOL = 1e-12


@dataclass(frozen=True)
class GridFunction:
    """Samples f(a + i h), i = 0..N."""

    a: float
    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.shape[0] < 1:
            raise DomainError("grid function needs a non-empty 1-D array of samples")
        if not self.h > 0:
            raise DomainError(f"h must be positive, got {self.h}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def sample(cls, func, a: float, h: float, n: int) -> GridFunction:
        x = a + h * np.arange(n + 1)
        return cls(a, h, np.asarray(func(x), dtype=float))

    @property
    def N(self) -> int:
        return self.values.shape[0] - 1

    @property
    def x(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.values.shape[0])

    def like(self, values) -> GridFunction:
        return GridFunction(self.a, self.h, values)


def _check_spacing(spec: OperatorSpec, f: GridFunction):
    if abs(f.h - spec.h) > _SPACING_RTOL * spec.h:
        raise PreconditionError(f"grid spacing {f.h} does not match operator spacing {spec.h}")


def apply(spec: OperatorSpec, f: GridFunction) -> GridFunction:
    _check_spacing(spec, f)
    g = weights(spec, f.N).g
    y = _backend.lower_toeplitz_matvec(np.ascontiguousarray(g), f.values)
    return f.like(spec.h ** (-spec.alpha) * y)


@lru_cache(maxsize=64)
def _weight_spectrum(spec: OperatorSpec, n_points: int):
    nfft = 1 << max(1, (2 * n_points - 1).bit_length())
    g = weights(spec, n_points - 1).g
    spec_g = np.fft.rfft(g, nfft)
    spec_g.setflags(write=False)
    return nfft, spec_g


def apply_fast(spec: OperatorSpec, f: GridFunction) -> GridFunction:
    """Same as :func:`apply` via a zero-padded circular convolution, O(N log N).

    The weight spectrum is cached per (spec, grid length).
    """
    _check_spacing(spec, f)
    n = f.values.shape[0]
    nfft, spec_g = _weight_spectrum(spec, n)
    y = np.fft.irfft(spec_g * np.fft.rfft(f.values, nfft), nfft)[:n]
    return f.like(spec.h ** (-spec.alpha) * y)


def solve(spec: OperatorSpec, rhs: GridFunction, f0: float) -> GridFunction:
    """Find f with apply(spec, f)[i] = rhs[i] for i >= 1 and f[0] = f0."""
    _check_spacing(spec, rhs)
    if spec.alpha == 0.0:
        out = rhs.values.copy()
        out[0] = f0
        return rhs.like(out)
    g = weights(spec, rhs.N).g
    b = spec.h ** spec.alpha * rhs.values
    f = np.zeros_like(b)
    f[0] = f0
    _backend.lower_toeplitz_solve(np.ascontiguousarray(g), b, f, 1)
    return rhs.like(f)


def max_error(approx: GridFunction, exact, skip_first: bool = True) -> float:
    """l_inf distance to ``exact`` (array or callable) over x_1..x_N."""
    ref = exact(approx.x) if callable(exact) else np.asarray(exact, dtype=float)
    diff = np.abs(approx.values - ref)
    if skip_first:
        diff = diff[1:]
    return float(np.max(diff)) if diff.size else 0.0


def relative_max_deviation(u: np.ndarray, v: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(v))), math.ulp(0.0))
    return float(np.max(np.abs(u - v))) / scale
