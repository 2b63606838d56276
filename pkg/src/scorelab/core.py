"""Distribution value types, trapezoid quadrature and entropy.

Densities live on uniform grids over a finite interval.  When the interval
is symmetric (``lo == -hi``) the abscissae are built so that ``x[::-1]`` is
exactly ``-x``, which keeps odd/even cancellations exact on the grid.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels

#: Pointwise validity margin for perturbations: |gamma| <= (1 - margin) * p.
DELTA_MARGIN = 1e-6

CATEGORICAL_RENORM_TOL = 1e-6
DENSITY_RENORM_TOL = 1e-4
_EXACT_TOL = 1e-12


class ValidationError(ValueError):
    """Input violates a type invariant (bad probabilities, bad grid, ...)."""


class GridMismatchError(ValidationError):
    """Two grid functions do not share the same grid."""


class DomainError(ValueError):
    """Argument outside the domain where an expression is defined."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (no bracket, no convergence)."""


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# categorical
# ---------------------------------------------------------------------------


class ProbVector:
    """A point on the probability simplex with m >= 2 categories."""

    __slots__ = ("probs",)

    def __init__(self, probs):
        arr = np.asarray(probs, dtype=float).ravel()
        if arr.size < 2:
            raise ValidationError(f"need at least 2 categories, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("probabilities must be finite")
        if np.any(arr < 0.0):
            raise ValidationError(f"negative probability in {arr.tolist()}")
        total = float(arr.sum())
        if abs(total - 1.0) > CATEGORICAL_RENORM_TOL:
            raise ValidationError(f"probabilities sum to {total:.9g}, not 1")
        if total != 1.0:
            arr = arr / total
        object.__setattr__(self, "probs", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("ProbVector is immutable")

    @property
    def m(self):
        return self.probs.shape[0]

    def __len__(self):
        return self.m

    def __getitem__(self, i):
        return float(self.probs[i])

    def __iter__(self):
        return iter(self.probs.tolist())

    def __eq__(self, other):
        return isinstance(other, ProbVector) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"ProbVector({self.probs.tolist()})"


@dataclass(frozen=True)
class BinaryPerturbed:
    """Binary forecast ``(p + gamma, q - gamma)`` departing from target ``(p, q)``."""

    p: float
    gamma: float

    def __post_init__(self):
        p, g = self.p, self.gamma
        if not 0.0 < p < 1.0:
            raise DomainError(f"p must lie in (0, 1), got {p}")
        q = 1.0 - p
        if not (0.0 < p + g < 1.0 and 0.0 < q - g < 1.0):
            raise DomainError(
                f"gamma={g} leaves the open simplex for p={p} (need |gamma| < min(p, q))"
            )

    @property
    def q(self):
        return 1.0 - self.p

    @property
    def target(self):
        return ProbVector([self.p, self.q])

    @property
    def forecast(self):
        return ProbVector([self.p + self.gamma, self.q - self.gamma])


def entropy_categorical(f):
    """Shannon entropy (nats) of a categorical distribution, 0 log 0 = 0."""
    probs = f.probs if isinstance(f, ProbVector) else ProbVector(f).probs
    nz = probs[probs > 0.0]
    return float(-np.sum(nz * np.log(nz)))


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n`` points on ``[lo, hi]``."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValidationError(f"grid needs n >= 3 points, got {self.n}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.hi > self.lo:
            raise ValidationError(f"grid needs finite hi > lo, got [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "n", int(self.n))

    @property
    def dx(self):
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def symmetric(self):
        return self.lo == -self.hi

    @property
    def x(self):
        x = np.linspace(self.lo, self.hi, self.n)
        if self.symmetric:
            x = 0.5 * (x - x[::-1])
        return x

    def refined(self):
        """Same interval with ``2n - 1`` points (every old point kept)."""
        return Grid(self.lo, self.hi, 2 * self.n - 1)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x <= self.hi)


def trapezoid(values, dx):
    """Composite trapezoid rule on a uniform grid."""
    values = np.asarray(values, dtype=float)
    return float(dx * (values.sum() - 0.5 * (values[0] + values[-1])))


def cumulative_trapezoid(values, dx):
    """Running trapezoid integral, starting at 0."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    out[0] = 0.0
    np.cumsum(0.5 * dx * (values[:-1] + values[1:]), out=out[1:])
    return out


class GridFunction:
    """Real function sampled on a :class:`Grid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float).ravel()
        if values.shape[0] != grid.n:
            raise ValidationError(f"expected {grid.n} values, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("grid values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", _frozen(values))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    lo = property(lambda self: self.grid.lo)
    hi = property(lambda self: self.grid.hi)
    n = property(lambda self: self.grid.n)
    dx = property(lambda self: self.grid.dx)
    x = property(lambda self: self.grid.x)

    def integral(self):
        return trapezoid(self.values, self.grid.dx)

    def __call__(self, x):
        """Linear interpolation; ``x`` must lie inside the grid interval."""
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if not np.all(self.grid.contains(xs)):
            bad = xs[~self.grid.contains(xs)][0]
            raise DomainError(f"x={bad} outside grid domain [{self.lo}, {self.hi}]")
        out = _kernels.interp_uniform(self.values, self.grid.lo, self.grid.dx, xs)
        return float(out[0]) if scalar else out

    def __repr__(self):
        return f"{type(self).__name__}(lo={self.lo}, hi={self.hi}, n={self.n})"


class GridDensity(GridFunction):
    """Nonnegative density on a grid with unit trapezoid integral.

    Integral drift up to 1e-4 is renormalized away; larger drift is an error.
    """

    __slots__ = ()

    def __init__(self, grid, values):
        super().__init__(grid, values)
        if np.any(self.values < 0.0):
            i = int(np.argmax(self.values < 0.0))
            raise ValidationError(f"negative density {self.values[i]} at x={grid.x[i]}")
        total = self.integral()
        if abs(total - 1.0) > DENSITY_RENORM_TOL:
            raise ValidationError(f"density integrates to {total:.9g}, not 1")
        if abs(total - 1.0) > _EXACT_TOL:
            object.__setattr__(self, "values", _frozen(self.values / total))

    @classmethod
    def from_function(cls, func, lo, hi, n, normalize=True):
        """Sample ``func`` on the grid; rescale to unit mass when ``normalize``."""
        grid = Grid(lo, hi, n)
        values = np.asarray(func(grid.x), dtype=float)
        if normalize:
            values = values / trapezoid(values, grid.dx)
        return cls(grid, values)


class GridCDF(GridFunction):
    """Nondecreasing running integral of a density, from 0 to 1."""

    __slots__ = ()

    def __init__(self, grid, values):
        super().__init__(grid, values)
        v = self.values
        if v[0] != 0.0 or abs(v[-1] - 1.0) > 1e-9 or np.any(np.diff(v) < 0.0):
            raise ValidationError("CDF must be nondecreasing from 0 to 1")


class OddPerturbation(GridFunction):
    """Odd departure gamma(x) on a symmetric grid.

    ``sign_constrained`` marks perturbations with gamma(x) <= 0 for x > 0.
    """

    __slots__ = ("sign_constrained",)

    def __init__(self, grid, values, sign_constrained=False):
        if not grid.symmetric:
            raise ValidationError(f"odd perturbation needs lo == -hi, got [{grid.lo}, {grid.hi}]")
        super().__init__(grid, values)
        v = self.values
        if not np.array_equal(v, -v[::-1]):
            raise ValidationError("perturbation is not exactly odd on the grid")
        if sign_constrained and np.any(v[grid.x > 0.0] > 0.0):
            raise ValidationError("sign-constrained perturbation must be <= 0 for x > 0")
        object.__setattr__(self, "sign_constrained", bool(sign_constrained))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n), sign_constrained=True)

    def scaled(self, c):
        """``c * gamma``; keeps the sign constraint for ``c >= 0``."""
        return OddPerturbation(self.grid, c * self.values, self.sign_constrained and c >= 0)

    def negated(self):
        return OddPerturbation(self.grid, -self.values)

    def violations(self, target, margin=DELTA_MARGIN):
        """Indices where |gamma| exceeds (1 - margin) * target."""
        _require_same_grid(self, target)
        bound = (1.0 - margin) * target.values
        # one part in 1e12 of slack absorbs rounding in eps * w at the boundary
        return np.flatnonzero(np.abs(self.values) > bound * (1.0 + 1e-12))

    def check_valid(self, target, margin=DELTA_MARGIN):
        bad = self.violations(target, margin)
        if bad.size:
            i = int(bad[0])
            raise ValidationError(
                f"|gamma|={abs(self.values[i]):.9g} exceeds (1-{margin:g})*p={target.values[i]:.9g}"
                f" at x={self.grid.x[i]:.9g} (index {i})"
            )
        return self

    def running_integral(self):
        """Cumulative error Gamma(x) = integral of gamma up to x."""
        return cumulative_trapezoid(self.values, self.grid.dx)


def _require_same_grid(f, g):
    if f.grid != g.grid:
        raise GridMismatchError(
            f"grid mismatch: [{f.lo}, {f.hi}] n={f.n} vs [{g.lo}, {g.hi}] n={g.n}"
        )


def same_grid(f, g):
    _require_same_grid(f, g)
    return f.grid


# ---------------------------------------------------------------------------
# grid operations
# ---------------------------------------------------------------------------


def entropy_density(f):
    """Trapezoid approximation of -int f log f, with 0 log 0 = 0."""
    v = f.values
    integrand = np.zeros_like(v)
    pos = v > 0.0
    integrand[pos] = -v[pos] * np.log(v[pos])
    return trapezoid(integrand, f.dx)


def inner_product(f, g):
    """Trapezoid approximation of int f g over the shared grid."""
    _require_same_grid(f, g)
    return trapezoid(f.values * g.values, f.dx)


def l2_norm_density(f):
    return math.sqrt(trapezoid(f.values * f.values, f.dx))


def cdf_of(f):
    """Running trapezoid integral of ``f``, clamped and pinned to end at 1."""
    running = cumulative_trapezoid(f.values, f.dx)
    running = np.clip(running / running[-1], 0.0, 1.0)
    running = np.maximum.accumulate(running)
    return GridCDF(f.grid, running)


# ---------------------------------------------------------------------------
# reference densities
# ---------------------------------------------------------------------------


def _normal_pdf(x, mean, sd):
    z = (x - mean) / sd
    return np.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))


def uniform_density(lo, hi, n=2049):
    grid = Grid(lo, hi, n)
    return GridDensity(grid, np.full(grid.n, 1.0 / (grid.hi - grid.lo)))


def gaussian_density(mean=0.0, sd=1.0, lo=-8.0, hi=8.0, n=2049):
    """Normal density truncated to ``[lo, hi]`` and renormalized on the grid."""
    return GridDensity.from_function(lambda x: _normal_pdf(x, mean, sd), lo, hi, n)


def skewed_mixture(weight, mu, lo=-8.0, hi=8.0, n=2049):
    """``weight * N(-mu, 1) + (1 - weight) * N(mu, 1)`` truncated to the grid.

    For ``weight > 0.5`` this satisfies p(x) >= p(-x) for every x < 0; a
    weight of 0.5 gives an exactly even density on a symmetric grid.
    """
    if not 0.0 < weight < 1.0:
        raise ValidationError(f"mixture weight must lie in (0, 1), got {weight}")

    def pdf(x):
        return weight * _normal_pdf(x, -mu, 1.0) + (1.0 - weight) * _normal_pdf(x, mu, 1.0)

    return GridDensity.from_function(pdf, lo, hi, n)


@dataclass
class ScoreReport:
    """Per-case scores for one rule; lower is better, +inf allowed."""

    rule: str
    scores: np.ndarray
    failures: list = field(default_factory=list)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)

    @property
    def count(self):
        return int(self.scores.shape[0])

    @property
    def mean(self):
        if self.count == 0:
            return float("nan")
        return float(np.mean(self.scores))
