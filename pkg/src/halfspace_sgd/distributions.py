"""Samplers and closed-form radial functionals for the marginal families.

Three radially symmetric marginals are implemented:

* ``gaussian`` — standard normal in any dimension d >= 2. Radial law is the
  chi distribution with d degrees of freedom.
* ``logconcave`` — the 2D density (6/pi) * exp(-2*sqrt(3)*||x||). Implemented
  exactly as printed; its per-coordinate variance is 1/4 (it is log-concave
  and radially symmetric but NOT isotropic), and all closed forms below are
  for this exact density.
* ``heavy_tailed`` — the 2D density b_s / (||x||/a_s + 1)^(2+s) for s > 2,
  with (a_s, b_s) solved so the density integrates to 1 and E||x||^2 = 2
  (identity covariance).

Closed forms (2D, written with c = 2*sqrt(3), tail(Z) = Pr[||x|| >= Z]):

    gaussian    tail(Z) = exp(-Z^2/2)
                E[1{||x||>=Z} ||x||] = Z exp(-Z^2/2) + sqrt(pi/2) erfc(Z/sqrt2)
    logconcave  tail(Z) = (1 + c Z) exp(-c Z)
                E[1{||x||>=Z} ||x||] = exp(-c Z) (6 Z^2 + 2 sqrt3 Z + 1)/sqrt3
    heavy       tail(Z) = a^s (a + (1+s) Z) / (a + Z)^(1+s)
                E[1{||x||>=Z} ||x||] =
                    a^s (2 a^2 + 2 a (s+1) Z + s (s+1) Z^2) / ((s-1)(a+Z)^(1+s))

Every closed form is cross-checked against adaptive quadrature of the density
in the test suite. Non-Gaussian samplers draw a uniform angle and invert the
radial CDF with a bracketing bisection to 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

__all__ = [
    "DistributionSpec",
    "WellBehavedParams",
    "gaussian",
    "log_concave",
    "heavy_tailed",
    "solve_isotropic_params",
    "sample",
    "density2d",
    "radial_density",
    "radial_pdf",
    "radial_cdf",
    "radial_tail_mass",
    "truncated_first_moment",
    "truncated_second_moment",
    "mean_norm",
    "z_for_tail_mass",
    "well_behaved_params",
    "compute_well_behaved_params",
]

_C_LC = 2.0 * math.sqrt(3.0)  # exponential decay rate of the log-concave family

FAMILIES = ("gaussian", "logconcave", "heavy_tailed")


@dataclass(frozen=True)
class DistributionSpec:
    """One radially symmetric marginal family with its parameters."""

    family: str
    dim: int
    s: float | None = None
    a_s: float | None = None
    b_s: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        if self.family != "gaussian" and self.dim != 2:
            raise ValueError(f"the {self.family} family is defined only for d = 2")
        if self.family == "heavy_tailed":
            if self.s is None or self.s <= 2.0:
                raise ValueError("heavy_tailed requires s > 2 (second moment diverges otherwise)")
            if self.a_s is None or self.b_s is None or self.a_s <= 0 or self.b_s <= 0:
                raise ValueError("heavy_tailed needs positive (a_s, b_s); use heavy_tailed(s)")


def gaussian(dim: int = 2) -> DistributionSpec:
    return DistributionSpec("gaussian", dim)


def log_concave() -> DistributionSpec:
    return DistributionSpec("logconcave", 2)


def heavy_tailed(s: float) -> DistributionSpec:
    a, b = solve_isotropic_params(s)
    return DistributionSpec("heavy_tailed", 2, s=float(s), a_s=a, b_s=b)


def solve_isotropic_params(s: float) -> tuple[float, float]:
    """Scale (a_s, b_s) making the heavy-tailed density a unit-mass,
    identity-covariance 2D distribution.

    Normalization eliminates b_s exactly: b_s = s(1+s)/(2 pi a_s^2). The
    remaining equation E||x||^2 = 6 a_s^2 / ((s-2)(s-1)) = 2 is solved for a_s
    by bracketing bisection (monotone increasing in a_s) to 1e-12.
    """
    s = float(s)
    if s <= 2.0:
        raise ValueError("s must be > 2: the second moment diverges at s <= 2")

    def second_moment(a: float) -> float:
        return 6.0 * a * a / ((s - 2.0) * (s - 1.0))

    lo, hi = 1e-9, 1.0
    while second_moment(hi) < 2.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if second_moment(mid) < 2.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, hi):
            break
    a = 0.5 * (lo + hi)
    b = s * (1.0 + s) / (2.0 * math.pi * a * a)
    return a, b


# ---------------------------------------------------------------------------
# densities and radial functionals
# ---------------------------------------------------------------------------

def radial_density(spec: DistributionSpec, r):
    """2D density as a function of radius, gamma(r) (spec must be 2D)."""
    if spec.dim != 2:
        raise ValueError("radial_density is the 2D projection density; spec must have dim 2")
    r = np.asarray(r, dtype=float)
    if spec.family == "gaussian":
        out = np.exp(-r * r / 2.0) / (2.0 * math.pi)
    elif spec.family == "logconcave":
        out = (6.0 / math.pi) * np.exp(-_C_LC * r)
    else:
        out = spec.b_s / (r / spec.a_s + 1.0) ** (2.0 + spec.s)
    return float(out) if out.ndim == 0 else out


def density2d(spec: DistributionSpec, x):
    """Density at a point (or rows of points) in R^2."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("density2d expects points in R^2")
    return radial_density(spec, np.sqrt(np.sum(x * x, axis=-1)))


def radial_pdf(spec: DistributionSpec, r):
    """pdf of the radius ||x|| (any supported dim)."""
    r = np.asarray(r, dtype=float)
    if spec.family == "gaussian":
        d = spec.dim
        logpdf = (
            (d - 1) * np.log(np.maximum(r, 1e-300))
            - r * r / 2.0
            - (d / 2.0 - 1.0) * math.log(2.0)
            - math.lgamma(d / 2.0)
        )
        out = np.where(r > 0, np.exp(logpdf), 0.0 if d > 1 else 1.0)
    else:
        out = 2.0 * math.pi * r * radial_density(spec, r)
    return float(out) if out.ndim == 0 else out


def _gauss_chi_tail(d: int, z):
    """Pr[chi_d >= z] = Q(d/2, z^2/2), regularized upper incomplete gamma.

    Half-integer recursion from Q(1/2, x) = erfc(sqrt(x)) and Q(1, x) = e^-x;
    Q(a+1, x) = Q(a, x) + x^a e^-x / Gamma(a+1), with terms in log space.
    """
    z = np.asarray(z, dtype=float)
    x = z * z / 2.0
    if d % 2 == 0:
        q = np.exp(-x)
        a = 1.0
    else:
        q = np.array([math.erfc(math.sqrt(v)) for v in np.atleast_1d(x)]).reshape(x.shape)
        a = 0.5
    logx = np.log(np.maximum(x, 1e-300))
    while a < d / 2.0 - 1e-9:
        term = np.where(x > 0, np.exp(a * logx - x - math.lgamma(a + 1.0)), 0.0)
        q = q + term
        a += 1.0
    return np.minimum(q, 1.0)


def _gauss_trunc_norm(d: int, z):
    """E[1{||x|| >= z} ||x||] for the d-dim standard normal.

    Equals sqrt(2) * Gamma((d+1)/2, z^2/2) / Gamma(d/2) (upper incomplete).
    """
    z = np.asarray(z, dtype=float)
    ratio = math.exp(math.lgamma((d + 1) / 2.0) - math.lgamma(d / 2.0))
    return math.sqrt(2.0) * ratio * _gauss_chi_tail(d + 1, z)


def radial_tail_mass(spec: DistributionSpec, Z):
    """Pr[||x|| >= Z], closed form per family."""
    Z = np.asarray(Z, dtype=float)
    if np.any(Z < 0):
        raise ValueError("Z must be >= 0")
    if spec.family == "gaussian":
        out = _gauss_chi_tail(spec.dim, Z)
    elif spec.family == "logconcave":
        out = (1.0 + _C_LC * Z) * np.exp(-_C_LC * Z)
    else:
        a, s = spec.a_s, spec.s
        out = a**s * (a + (1.0 + s) * Z) / (a + Z) ** (1.0 + s)
    return float(out) if out.ndim == 0 else out


def radial_cdf(spec: DistributionSpec, r):
    """Pr[||x|| <= r] = 1 - radial_tail_mass."""
    return 1.0 - radial_tail_mass(spec, r)


def truncated_first_moment(spec: DistributionSpec, Z):
    """E[1{||x|| >= Z} * ||x||], closed form per family."""
    Z = np.asarray(Z, dtype=float)
    if np.any(Z < 0):
        raise ValueError("Z must be >= 0")
    if spec.family == "gaussian":
        out = _gauss_trunc_norm(spec.dim, Z)
    elif spec.family == "logconcave":
        out = np.exp(-_C_LC * Z) * (6.0 * Z * Z + 2.0 * math.sqrt(3.0) * Z + 1.0) / math.sqrt(3.0)
    else:
        a, s = spec.a_s, spec.s
        out = (
            a**s
            * (2.0 * a * a + 2.0 * a * (s + 1.0) * Z + s * (s + 1.0) * Z * Z)
            / ((s - 1.0) * (a + Z) ** (1.0 + s))
        )
    return float(out) if out.ndim == 0 else out


def truncated_second_moment(spec: DistributionSpec, Z):
    """E[1{||x|| >= Z} * ||x||^2], closed form per family.

    gaussian: d * Q(d/2 + 1, Z^2/2); logconcave: 12 e^{-cZ} (Z^3/c + 3 Z^2/c^2
    + 6 Z/c^3 + 6/c^4); heavy: s(1+s) a^2 I3(Z/a) with I3 the incomplete Beta
    expansion of int t^3 (t+1)^{-(2+s)} dt.
    """
    Z = np.asarray(Z, dtype=float)
    if np.any(Z < 0):
        raise ValueError("Z must be >= 0")
    if spec.family == "gaussian":
        d = spec.dim
        out = d * _gauss_chi_tail(d + 2, Z)
    elif spec.family == "logconcave":
        c = _C_LC
        out = 12.0 * np.exp(-c * Z) * (Z**3 / c + 3.0 * Z**2 / c**2 + 6.0 * Z / c**3 + 6.0 / c**4)
    else:
        a, s = spec.a_s, spec.s
        v = Z / a + 1.0
        i3 = (
            v ** (2.0 - s) / (s - 2.0)
            - 3.0 * v ** (1.0 - s) / (s - 1.0)
            + 3.0 * v ** (-s) / s
            - v ** (-1.0 - s) / (s + 1.0)
        )
        out = s * (1.0 + s) * a * a * i3
    return float(out) if out.ndim == 0 else out


def mean_norm(spec: DistributionSpec) -> float:
    """E||x||."""
    return float(truncated_first_moment(spec, 0.0))


def z_for_tail_mass(spec: DistributionSpec, p: float) -> float:
    """The radius Z with Pr[||x|| >= Z] = p, by bracketing bisection."""
    if not 0.0 < p <= 1.0:
        raise ValueError("tail mass must lie in (0, 1]")
    if p == 1.0:
        return 0.0
    if spec.family == "gaussian" and spec.dim == 2:
        return math.sqrt(2.0 * math.log(1.0 / p))
    lo, hi = 0.0, 1.0
    while radial_tail_mass(spec, hi) > p:
        hi *= 2.0
        if hi > 1e14:
            raise RuntimeError("failed to bracket the tail quantile")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if radial_tail_mass(spec, mid) > p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _invert_radial_tail(spec: DistributionSpec, t: np.ndarray) -> np.ndarray:
    """Vectorized bracketing bisection: r >= 0 with tail(r) = t, t in (0, 1]."""
    lo = np.zeros_like(t)
    hi = np.full_like(t, 1.0)
    # grow the bracket until tail(hi) < t everywhere
    for _ in range(80):
        mask = radial_tail_mass(spec, hi) > t
        if not np.any(mask):
            break
        hi[mask] *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        too_big = radial_tail_mass(spec, mid) > t
        lo = np.where(too_big, mid, lo)
        hi = np.where(too_big, hi, mid)
    return 0.5 * (lo + hi)


def sample(spec: DistributionSpec, n: int, seed: int) -> np.ndarray:
    """Draw n i.i.d. points from the marginal; deterministic given (spec, seed).

    Gaussian: standard normal per coordinate. 2D radial families: uniform
    angle, radius by inverse CDF of the radial marginal.
    """
    if n < 1:
        raise ValueError("need n >= 1 samples")
    rng = np.random.default_rng(seed)
    if spec.family == "gaussian":
        return rng.standard_normal((n, spec.dim))
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    u = rng.random(n)
    r = _invert_radial_tail(spec, 1.0 - u)
    return r[:, None] * np.stack([np.cos(phi), np.sin(phi)], axis=1)


class SampleStream:
    """Seeded, chunked source of i.i.d. points; one PSGD pass consumes one stream."""

    def __init__(self, spec: DistributionSpec, seed: int):
        self.spec = spec
        self.seed = int(seed)
        self._rng = np.random.default_rng(seed)

    def take(self, k: int) -> np.ndarray:
        spec = self.spec
        if spec.family == "gaussian":
            return self._rng.standard_normal((k, spec.dim))
        phi = self._rng.uniform(0.0, 2.0 * math.pi, k)
        u = self._rng.random(k)
        r = _invert_radial_tail(spec, 1.0 - u)
        return r[:, None] * np.stack([np.cos(phi), np.sin(phi)], axis=1)


# ---------------------------------------------------------------------------
# well-behavedness constants (U, R)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WellBehavedParams:
    """Anti-anti-concentration radius R and envelope constant U.

    The density is >= 1/U on the disk ||x|| <= R, and the radial envelope
    t(r) = gamma(r) satisfies sup t <= U, integral of t <= U and integral of
    ||x|| t <= U. R is chosen to maximize R^4/U^3, the combination gating the
    surrogate analysis; values for the stock families ship in data/.
    """

    family: str
    U: float
    R: float


def compute_well_behaved_params(spec: DistributionSpec) -> WellBehavedParams:
    """Recompute (U, R) by bounding the density over the disk ||x|| <= R."""
    if spec.dim != 2:
        raise ValueError("well-behaved constants are defined for the 2D projections")
    u0 = max(float(radial_density(spec, 0.0)), 1.0, mean_norm(spec))

    def u_of(rr: float) -> float:
        return max(u0, 1.0 / float(radial_density(spec, rr)))

    grid = np.linspace(1e-3, 6.0, 6000)
    objective = grid**4 / np.array([u_of(g) for g in grid]) ** 3
    i = int(np.argmax(objective))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    for _ in range(200):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if m1**4 / u_of(m1) ** 3 < m2**4 / u_of(m2) ** 3:
            lo = m1
        else:
            hi = m2
    best_r = float(0.5 * (lo + hi))
    return WellBehavedParams(spec.family, float(u_of(best_r)), best_r)


def _constants_path():
    return resources.files("halfspace_sgd").joinpath("data/well_behaved.txt")


def well_behaved_params(family: str) -> WellBehavedParams:
    """Load the recorded (U, R) constants for a stock family."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    table = {}
    for line in _constants_path().read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        table[key.strip()] = float(value)
    return WellBehavedParams(family, U=table[f"{family}.U"], R=table[f"{family}.R"])
