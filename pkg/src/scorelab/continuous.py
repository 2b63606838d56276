"""Scoring rules for density forecasts on grids.

Pointwise scores accept a scalar outcome or an array of outcomes and return
the same shape.  Expected scores integrate against a target density with the
trapezoid rule on the shared grid.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    DomainError,
    GridCDF,
    GridDensity,
    OddPerturbation,
    ValidationError,
    cdf_of,
    inner_product,
    l2_norm_density,
    same_grid,
    trapezoid,
)

RULES = ("quadratic", "log", "spherical", "crps")


def _outcomes(f, x):
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    inside = f.grid.contains(xs)
    if not np.all(inside):
        raise DomainError(f"outcome {xs[~inside][0]} outside grid domain [{f.lo}, {f.hi}]")
    return xs, scalar


def _ret(out, scalar):
    return float(out[0]) if scalar else out


def _safe_log(values):
    out = np.full(values.shape, -math.inf)
    pos = values > 0.0
    out[pos] = np.log(values[pos])
    return out


@dataclass(frozen=True)
class DensityForecastPair:
    """Target ``p`` with the mirrored forecasts ``p + gamma`` and ``p - gamma``."""

    target: GridDensity
    perturbation: OddPerturbation

    def __post_init__(self):
        self.perturbation.check_valid(self.target)

    @property
    def plus(self):
        return GridDensity(self.target.grid, self.target.values + self.perturbation.values)

    @property
    def minus(self):
        return GridDensity(self.target.grid, self.target.values - self.perturbation.values)


# ---------------------------------------------------------------------------
# quadratic
# ---------------------------------------------------------------------------


def quadratic_score(f, x):
    """||f||**2 - 2 f(x)."""
    xs, scalar = _outcomes(f, x)
    fx = _kernels.interp_uniform(f.values, f.lo, f.dx, xs)
    return _ret(l2_norm_density(f) ** 2 - 2.0 * fx, scalar)


def expected_quadratic(f, p):
    """||f - p||**2 - ||p||**2."""
    grid = same_grid(f, p)
    d = f.values - p.values
    return trapezoid(d * d, grid.dx) - trapezoid(p.values * p.values, grid.dx)


# ---------------------------------------------------------------------------
# logarithmic
# ---------------------------------------------------------------------------


def log_score_density(f, x):
    """-log f(x); ``inf`` where the interpolated density vanishes."""
    xs, scalar = _outcomes(f, x)
    fx = _kernels.interp_uniform(f.values, f.lo, f.dx, xs)
    with np.errstate(divide="ignore"):
        out = -np.log(fx)
    return _ret(out, scalar)


def expected_log_density(f, p):
    """-int p log f.  Returns ``inf`` if f vanishes anywhere p has mass."""
    grid = same_grid(f, p)
    mass = p.values > 0.0
    if np.any(f.values[mass] == 0.0):
        return math.inf
    integrand = np.zeros(grid.n)
    integrand[mass] = -p.values[mass] * np.log(f.values[mass])
    return trapezoid(integrand, grid.dx)


def support_violation(f, p):
    """True when f = 0 somewhere p > 0 (the expected log score is infinite)."""
    same_grid(f, p)
    return bool(np.any((p.values > 0.0) & (f.values == 0.0)))


def expected_ls_gap_density(pair):
    """E[LS(p + gamma)] - E[LS(p - gamma)] = int p log((p - gamma) / (p + gamma)).

    Zero for an even target; nonnegative for a left-heavy target with a
    sign-constrained odd gamma.
    """
    p = pair.target.values
    g = pair.perturbation.values
    # difference of logs keeps the integrand exactly odd when p is even
    integrand = p * (_safe_log(p - g) - _safe_log(p + g))
    integrand[p == 0.0] = 0.0
    return trapezoid(integrand, pair.target.dx)


def h_functional_density(p, gamma1, gamma2):
    """int p log((p - gamma2) / (p + gamma1)) = E[LS(p + gamma1)] - E[LS(p - gamma2)]."""
    gamma1.check_valid(p)
    gamma2.check_valid(p)
    integrand = p.values * (_safe_log(p.values - gamma2.values) - _safe_log(p.values + gamma1.values))
    integrand[p.values == 0.0] = 0.0
    return trapezoid(integrand, p.dx)


# ---------------------------------------------------------------------------
# spherical
# ---------------------------------------------------------------------------


def spherical_score_density(f, x):
    """-f(x) / ||f||_2."""
    xs, scalar = _outcomes(f, x)
    fx = _kernels.interp_uniform(f.values, f.lo, f.dx, xs)
    return _ret(-fx / l2_norm_density(f), scalar)


def expected_spherical_density(f, p):
    """-<f, p> / ||f||_2."""
    return -inner_product(f, p) / l2_norm_density(f)


def spherical_square_gap(pair):
    """<rho f+, p>**2 - <rho f-, p>**2 computed directly, with rho f = f / ||f||."""
    p = pair.target
    plus, minus = pair.plus, pair.minus
    return (inner_product(plus, p) / l2_norm_density(plus)) ** 2 - (
        inner_product(minus, p) / l2_norm_density(minus)
    ) ** 2


def spherical_square_gap_identity(pair):
    """4 <gamma,p>(||p||^2 ||gamma||^2 - <gamma,p>^2) / (||f+||^2 ||f-||^2).

    Nonnegative whenever <gamma, p> >= 0, by Cauchy-Schwarz.
    """
    p, g = pair.target, pair.perturbation
    gp = inner_product(g, p)
    pp = l2_norm_density(p) ** 2
    gg = l2_norm_density(g) ** 2
    denom = l2_norm_density(pair.plus) ** 2 * l2_norm_density(pair.minus) ** 2
    return 4.0 * gp * (pp * gg - gp * gp) / denom


# ---------------------------------------------------------------------------
# CRPS
# ---------------------------------------------------------------------------


def _as_cdf(F):
    if isinstance(F, GridCDF):
        return F
    if isinstance(F, GridDensity):
        return cdf_of(F)
    raise ValidationError(f"expected GridCDF or GridDensity, got {type(F).__name__}")


def _crps_prefix(F):
    """Trapezoid integrals of F**2 from the left end and (F-1)**2 to the right end."""
    v = F.values
    half = 0.5 * F.dx
    sq = v * v
    below = np.empty(F.n)
    below[0] = 0.0
    np.cumsum(half * (sq[:-1] + sq[1:]), out=below[1:])
    sq1 = (v - 1.0) ** 2
    cells = half * (sq1[:-1] + sq1[1:])
    above = np.empty(F.n)
    above[-1] = 0.0
    above[:-1] = np.cumsum(cells[::-1])[::-1]
    return below, above


def crps(F, x):
    """int_lo^x F**2 + int_x^hi (F - 1)**2 with the outcome's cell split at x.

    ``F`` may be a :class:`GridCDF` or a :class:`GridDensity` (converted with
    :func:`cdf_of`).
    """
    F = _as_cdf(F)
    xs, scalar = _outcomes(F, x)
    below, above = _crps_prefix(F)
    out = _kernels.crps_split(below, above, F.values, F.lo, F.dx, xs)
    return _ret(out, scalar)


def expected_crps(F, p):
    """int P(1 - P) + int (F - P)**2 with P the CDF of the target ``p``."""
    F = _as_cdf(F)
    grid = same_grid(F, p)
    P = cdf_of(p).values
    d = F.values - P
    return trapezoid(P * (1.0 - P), grid.dx) + trapezoid(d * d, grid.dx)


def expected_crps_direct(F, p):
    """Nested quadrature of int p(x) [int_lo^x F**2 + int_x^hi (F-1)**2] dx.

    Outcomes are taken at the grid points, where the inner integrals are the
    running trapezoid sums.  Independent of the integration-by-parts form.
    """
    F = _as_cdf(F)
    grid = same_grid(F, p)
    below, above = _crps_prefix(F)
    return trapezoid(p.values * (below + above), grid.dx)


def mse_criterion(pair, sign=1):
    """int p Gamma**2 with Gamma the running integral of ``sign * gamma``."""
    if sign not in (1, -1):
        raise ValidationError(f"sign must be +1 or -1, got {sign}")
    g = pair.perturbation if sign == 1 else pair.perturbation.negated()
    cum = g.running_integral()
    return trapezoid(pair.target.values * cum * cum, pair.target.dx)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_POINTWISE = {
    "quadratic": quadratic_score,
    "log": log_score_density,
    "spherical": spherical_score_density,
    "crps": crps,
}

_EXPECTED = {
    "quadratic": expected_quadratic,
    "log": expected_log_density,
    "spherical": expected_spherical_density,
    "crps": expected_crps,
}


def score(rule, f, x):
    try:
        fn = _POINTWISE[rule]
    except KeyError:
        raise ValidationError(f"unknown density rule {rule!r}; choose from {RULES}") from None
    return fn(f, x)


def expected_score(rule, f, p):
    try:
        fn = _EXPECTED[rule]
    except KeyError:
        raise ValidationError(f"unknown density rule {rule!r}; choose from {RULES}") from None
    return fn(f, p)


def sample_target(p, size, seed):
    """Inverse-CDF draws from ``p`` using a counter-based (Philox) stream."""
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random(size)
    return _kernels.inverse_cdf(cdf_of(p).values, p.lo, p.dx, u)


def monte_carlo_expected(rule, f, p, size=1_000_000, seed=42):
    """Mean pointwise score over ``size`` draws from ``p``, with its standard error."""
    x = sample_target(p, size, seed)
    s = np.asarray(score(rule, f, x))
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(size))
