"""Shared helpers for the test suite (independent oracle routes)."""

import math

import numpy as np

from halfspace_sgd import distributions as dist
from halfspace_sgd.quadrature import integrate_refining


def quad_tail_mass(spec, Z, tol=1e-12):
    """Pr[||x|| >= Z] by generic panel quadrature of 2 pi r gamma(r)."""
    if spec.family == "heavy_tailed":
        hi = max(Z, 1.0) * 10.0 ** (10.0 / spec.s)
    else:
        hi = Z + 60.0
    f = lambda r: 2.0 * math.pi * r * dist.radial_density(spec, r)
    split = max(Z * 2.0, Z + 1.0, 1.0)
    v1, _ = integrate_refining(f, Z, split, tol, panels=8)
    v2, _ = integrate_refining(f, split, hi, tol, panels=8, geometric=True, max_doublings=16)
    return v1 + v2


def ks_uniform(values01: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance of values in [0, 1] to the uniform law."""
    u = np.sort(values01)
    n = u.size
    d_plus = np.max(np.arange(1, n + 1) / n - u)
    d_minus = np.max(u - np.arange(0, n) / n)
    return float(max(d_plus, d_minus))


def least_squares_line(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xbar, ybar = x.mean(), y.mean()
    slope = float(np.sum((x - xbar) * (y - ybar)) / np.sum((x - xbar) ** 2))
    return slope, float(ybar - slope * xbar)
