"""Cancellation-safe kernels and small integration helpers.

The closed-form covariance and characteristic-coefficient results all involve
the dimensionless damping time u = 2*lam*alpha*t through the combinations

    gamma(u) = 1 - e^-u
    f2(u)    = u - 1 + e^-u
    k1(u)    = gamma^2 + 2 gamma - 2u
    k2(u)    = e^-2u + 2u e^-u - 1
    k3(u)    = -2u e^-2u - gamma^2 + 2 gamma e^-u

For laboratory masses and times u is of order 1e-20, and the last four are
O(u^2) or O(u^3) differences of O(1) terms: direct evaluation returns noise.
Each kernel therefore switches to its exact Taylor series below a fixed
threshold.  Series coefficients are generated from integer arithmetic at
import time, and the retained order makes the truncation error far below
double precision at the switch point.

Signs for u >= 0: gamma, f2 >= 0; k1, k2, k3 <= 0.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

import numpy as np

_N_TERMS = 40
_SWITCH = 0.75


def _series_coeffs(coeff_of_n, n_min):
    """Float Horner table for sum_{n>=n_min} coeff_of_n(n) u^n, exact until cast."""
    return np.array(
        [float(coeff_of_n(n)) for n in range(n_min, _N_TERMS + 1)], dtype=float
    )


_F2_COEFFS = _series_coeffs(lambda n: Fraction((-1) ** n, factorial(n)), 2)
_K1_COEFFS = _series_coeffs(
    lambda n: Fraction((-1) ** (n + 1) * (4 - 2**n), factorial(n)), 3
)
_K2_COEFFS = _series_coeffs(
    lambda n: Fraction((-1) ** n * (2**n - 2 * n), factorial(n)), 3
)
_K3_COEFFS = _series_coeffs(
    lambda n: Fraction((-1) ** n * (2**n * n + 4 - 3 * 2**n), factorial(n)), 3
)


def _horner(u, coeffs, n_min):
    acc = np.full_like(u, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * u + c
    return acc * u**n_min


def _eval_kernel(u, coeffs, n_min, direct):
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u1 = np.atleast_1d(u)
    out = np.empty_like(u1)
    small = u1 < _SWITCH
    if small.any():
        out[small] = _horner(u1[small], coeffs, n_min)
    big = ~small
    if big.any():
        out[big] = direct(u1[big])
    return float(out[0]) if scalar else out


def one_minus_exp(u):
    """gamma(u) = 1 - e^-u, accurate for all u >= 0."""
    return -np.expm1(-np.asarray(u, dtype=float))


def f2(u):
    """u - 1 + e^-u  (= u^2/2 - u^3/6 + ...), non-negative."""
    return _eval_kernel(u, _F2_COEFFS, 2, lambda v: v - 1.0 + np.exp(-v))


def k1(u):
    """gamma^2 + 2 gamma - 2u  (= -(2/3)u^3 + ...), non-positive."""

    def direct(v):
        g = -np.expm1(-v)
        return g * g + 2.0 * g - 2.0 * v

    return _eval_kernel(u, _K1_COEFFS, 3, direct)


def k2(u):
    """e^-2u + 2u e^-u - 1  (= -(1/3)u^3 + ...), non-positive."""

    def direct(v):
        return np.exp(-2.0 * v) + 2.0 * v * np.exp(-v) - 1.0

    return _eval_kernel(u, _K2_COEFFS, 3, direct)


def k3(u):
    """-2u e^-2u - gamma^2 + 2 gamma e^-u  (= -(2/3)u^3 + ...), non-positive."""

    def direct(v):
        g = -np.expm1(-v)
        d = np.exp(-v)
        return -2.0 * v * d * d - g * g + 2.0 * g * d

    return _eval_kernel(u, _K3_COEFFS, 3, direct)


def rk4_path(f, y0, t_grid, substeps=1):
    """Classical Runge-Kutta along t_grid, vectorized over the state shape.

    f(t, y) must accept and return arrays shaped like y0.  Returns an array of
    shape (len(t_grid),) + y0.shape containing the solution at every grid
    point, starting with y0 itself.
    """
    y = np.array(y0, copy=True)
    out = np.empty((len(t_grid),) + y.shape, dtype=y.dtype)
    out[0] = y
    for i in range(len(t_grid) - 1):
        t0, t1 = t_grid[i], t_grid[i + 1]
        h = (t1 - t0) / substeps
        t = t0
        for _ in range(substeps):
            s1 = f(t, y)
            s2 = f(t + 0.5 * h, y + 0.5 * h * s1)
            s3 = f(t + 0.5 * h, y + 0.5 * h * s2)
            s4 = f(t + h, y + h * s3)
            y = y + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
            t += h
        out[i + 1] = y
    return out


__all__ = ["one_minus_exp", "f2", "k1", "k2", "k3", "rk4_path"]
