"""Minimum-score estimation and model ranking.

Fitting minimizes the empirical mean of a scoring rule over a sample with a
Nelder-Mead simplex in scaled coordinates (locations as-is, scales in log
space, mixture weights in logit space).  With the log rule this is maximum
likelihood; other rules give other estimates of the same family.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import categorical, continuous
from .core import DomainError, GridDensity, ProbVector, ScoreReport, ValidationError, _normal_pdf

FAMILIES = ("gaussian", "gaussian-mixture-2")
FIT_RULES = ("log", "quadratic", "spherical", "crps")


# ---------------------------------------------------------------------------
# simplex search
# ---------------------------------------------------------------------------


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def nelder_mead(func, x0, step=0.1, xtol=1e-6, max_iter=5000):
    """Minimize ``func`` from ``x0``; stop when the simplex diameter drops below ``xtol``.

    The diameter is the largest infinity-norm distance from the best vertex.
    ``history`` holds the best value after each iteration.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    simplex = np.vstack([x0] + [x0 + step * np.eye(dim)[i] for i in range(dim)])
    values = np.array([func(v) for v in simplex])
    history = []
    for it in range(1, max_iter + 1):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        history.append(float(values[0]))
        if np.max(np.abs(simplex[1:] - simplex[0])) < xtol:
            return SimplexResult(simplex[0].copy(), float(values[0]), it, True, history)

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = func(xr)
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = func(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = func(xc)
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = func(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
        values[1:] = [func(v) for v in simplex[1:]]

    order = np.argsort(values, kind="stable")
    history.append(float(values[order[0]]))
    return SimplexResult(simplex[order[0]].copy(), float(values[order[0]]), max_iter, False, history)


# ---------------------------------------------------------------------------
# parametric families
# ---------------------------------------------------------------------------


def _logit(w):
    return math.log(w / (1.0 - w))


def _expit(z):
    return 1.0 / (1.0 + math.exp(-z))


@dataclass(frozen=True)
class ParametricFamily:
    """A density family rendered on the grid ``[lo, hi]`` with ``n`` points."""

    name: str
    lo: float
    hi: float
    n: int = 2049

    def __post_init__(self):
        if self.name not in FAMILIES:
            raise ValidationError(f"unknown family {self.name!r}; choose from {FAMILIES}")

    @property
    def param_names(self):
        if self.name == "gaussian":
            return ("mu", "sigma")
        return ("weight", "mu1", "sigma1", "mu2", "sigma2")

    @property
    def _dx(self):
        return (self.hi - self.lo) / (self.n - 1)

    def _scale_bounds(self):
        return math.log(2.0 * self._dx), math.log(self.hi - self.lo)

    def to_natural(self, z):
        if self.name == "gaussian":
            return {"mu": float(z[0]), "sigma": math.exp(z[1])}
        return {
            "weight": _expit(z[0]),
            "mu1": float(z[1]),
            "sigma1": math.exp(z[2]),
            "mu2": float(z[3]),
            "sigma2": math.exp(z[4]),
        }

    def to_scaled(self, params):
        if self.name == "gaussian":
            return np.array([params["mu"], math.log(params["sigma"])])
        return np.array(
            [
                _logit(params["weight"]),
                params["mu1"],
                math.log(params["sigma1"]),
                params["mu2"],
                math.log(params["sigma2"]),
            ]
        )

    def in_bounds(self, z):
        lo_s, hi_s = self._scale_bounds()
        if self.name == "gaussian":
            return self.lo <= z[0] <= self.hi and lo_s <= z[1] <= hi_s
        return (
            abs(z[0]) <= 12.0
            and self.lo <= z[1] <= self.hi
            and self.lo <= z[3] <= self.hi
            and lo_s <= z[2] <= hi_s
            and lo_s <= z[4] <= hi_s
        )

    def render(self, params):
        """Grid density for natural ``params`` (renormalized on the grid)."""
        if self.name == "gaussian":
            pdf = lambda x: _normal_pdf(x, params["mu"], params["sigma"])
        else:
            w = params["weight"]
            pdf = lambda x: w * _normal_pdf(x, params["mu1"], params["sigma1"]) + (1.0 - w) * _normal_pdf(
                x, params["mu2"], params["sigma2"]
            )
        return GridDensity.from_function(pdf, self.lo, self.hi, self.n)

    def initial(self, samples):
        mean, sd = float(np.mean(samples)), float(np.std(samples))
        if self.name == "gaussian":
            return {"mu": mean, "sigma": sd}
        q25, q75 = np.percentile(samples, [25, 75])
        return {"weight": 0.5, "mu1": float(q25), "sigma1": sd / 2, "mu2": float(q75), "sigma2": sd / 2}


def default_family(name, samples, n=2049, pad_sd=6.0):
    """Family on a grid covering the sample with ``pad_sd`` standard deviations each side."""
    samples = np.asarray(samples, dtype=float)
    sd = float(np.std(samples)) or 1.0
    return ParametricFamily(name, float(samples.min() - pad_sd * sd), float(samples.max() + pad_sd * sd), n)


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 3
    jitter: float = 0.1
    seed: int = 42
    xtol: float = 1e-6
    max_iter: int = 5000
    step: float = 0.1


@dataclass
class EstimationResult:
    rule: str
    family: str
    params: dict
    mean_score: float
    initial_score: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)

    def to_record(self):
        return {
            "rule": self.rule,
            "family": self.family,
            "params": dict(self.params),
            "mean_score": self.mean_score,
            "initial_score": self.initial_score,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def empirical_score(rule, density, samples):
    return float(np.mean(continuous.score(rule, density, samples)))


def min_score_fit(samples, family, rule, config=None):
    """Fit ``family`` to ``samples`` by minimizing the mean ``rule`` score.

    Runs ``config.restarts`` simplex searches from jittered copies of a
    moment-based start and keeps the best.  ``converged`` is False only when
    no restart met the diameter criterion; the best point is returned anyway.
    """
    config = config or FitConfig()
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 10:
        raise ValidationError(f"need at least 10 samples, got {samples.size}")
    if rule not in FIT_RULES:
        raise ValidationError(f"unknown fitting rule {rule!r}; choose from {FIT_RULES}")
    if samples.min() < family.lo or samples.max() > family.hi:
        raise DomainError(f"samples span [{samples.min()}, {samples.max()}] outside [{family.lo}, {family.hi}]")

    def objective(z):
        if not family.in_bounds(z):
            return math.inf
        try:
            dens = family.render(family.to_natural(z))
        except (ValidationError, FloatingPointError, ZeroDivisionError):
            return math.inf
        val = empirical_score(rule, dens, samples)
        return val if math.isfinite(val) else math.inf

    z0 = family.to_scaled(family.initial(samples))
    initial_score = objective(z0)
    rng = np.random.Generator(np.random.Philox(config.seed))
    best = None
    for _ in range(config.restarts):
        start = z0 + config.jitter * rng.standard_normal(z0.size)
        res = nelder_mead(objective, start, step=config.step, xtol=config.xtol, max_iter=config.max_iter)
        if best is None or res.fun < best.fun or (res.converged and not best.converged and res.fun <= best.fun):
            best = res
    if initial_score < best.fun:
        # jitter landed every restart in a worse basin; keep the start itself
        best = SimplexResult(z0, initial_score, best.iterations, False, best.history)
    return EstimationResult(
        rule=rule,
        family=family.name,
        params=family.to_natural(best.x),
        mean_score=best.fun,
        initial_score=initial_score,
        iterations=best.iterations,
        converged=best.converged,
        history=best.history,
    )


# ---------------------------------------------------------------------------
# ranking
# ---------------------------------------------------------------------------


@dataclass
class RankedModel:
    name: str
    rank: int
    report: ScoreReport

    def to_record(self):
        return {
            "name": self.name,
            "rank": self.rank,
            "mean": self.report.mean,
            "count": self.report.count,
            "failures": list(self.report.failures),
        }


def _score_one(rule, forecast, outcome):
    if isinstance(forecast, ProbVector):
        return categorical.score(rule, forecast, outcome)
    if isinstance(forecast, GridDensity):
        return continuous.score(rule, forecast, float(outcome))
    raise ValidationError(f"cannot score forecast of type {type(forecast).__name__}")


def _model_scores(rule, model, outcomes):
    """Per-case scores (nan where scoring failed) and the failed case indices."""
    n = len(outcomes)
    scores = np.full(n, np.nan)
    failed = []
    if isinstance(model, GridDensity):
        xs = np.asarray(outcomes, dtype=float)
        ok = model.grid.contains(xs)
        if np.any(ok):
            scores[ok] = continuous.score(rule, model, xs[ok])
        failed = np.flatnonzero(~ok).tolist()
        return scores, failed
    per_case = model if isinstance(model, (list, tuple)) else [model] * n
    if len(per_case) != n:
        raise ValidationError(f"model has {len(per_case)} forecasts for {n} outcomes")
    for i, (fc, y) in enumerate(zip(per_case, outcomes)):
        try:
            scores[i] = _score_one(rule, fc, y)
        except (DomainError, ValidationError):
            failed.append(i)
    return scores, failed


def rank_models(forecasts, outcomes, rule, names=None, tie_tol=categorical.TIE_TOL):
    """Order models by ascending mean score; ties within ``tie_tol`` share a rank.

    ``forecasts`` holds one entry per model: a single forecast used for every
    outcome, or a list with one forecast per outcome.  A case on which every
    model fails is dropped; a model that fails a case the others can score
    takes ``inf`` there, and the failure is listed in its report.
    """
    names = list(names) if names is not None else [f"model{i + 1}" for i in range(len(forecasts))]
    if len(names) != len(forecasts):
        raise ValidationError("names and forecasts differ in length")
    results = [_model_scores(rule, m, outcomes) for m in forecasts]
    all_failed = set(range(len(outcomes)))
    for _, failed in results:
        all_failed &= set(failed)
    keep = np.array([i not in all_failed for i in range(len(outcomes))], dtype=bool)

    reports = []
    for scores, failed in results:
        s = np.where(np.isnan(scores), math.inf, scores)[keep]
        reports.append(ScoreReport(rule, s, failures=[i for i in failed if i not in all_failed]))

    order = sorted(range(len(reports)), key=lambda i: (reports[i].mean, i))
    ranked = []
    for pos, i in enumerate(order):
        if pos and _tied(reports[i].mean, ranked[-1].report.mean, tie_tol):
            rank = ranked[-1].rank
        else:
            rank = pos + 1
        ranked.append(RankedModel(names[i], rank, reports[i]))
    return ranked


def _tied(a, b, tol):
    return a == b or abs(a - b) <= tol
