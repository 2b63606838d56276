"""Scoring rules for categorical forecasts and the binary diagnostics.

All scores are losses (lower is better) in natural-log units.  Outcomes are
1-based category indices.  The binary helpers take a target ``p`` (with
``q = 1 - p``) and a departure ``gamma``; the forecast is
``(p + gamma, q - gamma)``.
"""

import math

import numpy as np

from .core import DomainError, NumericalError, ProbVector, ValidationError, entropy_categorical

RULES = ("brier", "log", "spherical", "rps")

#: Expected-score differences at or below this are ties.
TIE_TOL = 1e-12


def _as_probs(f):
    return f if isinstance(f, ProbVector) else ProbVector(f)


def _check_outcome(f, j):
    if int(j) != j or not 1 <= j <= f.m:
        raise ValidationError(f"outcome index {j} outside 1..{f.m}")
    return int(j) - 1


def brier(f, j):
    """(1/m) * sum_i (f_i - delta_ij)**2."""
    f = _as_probs(f)
    k = _check_outcome(f, j)
    d = f.probs.copy()
    d[k] -= 1.0
    return float(np.dot(d, d) / f.m)


def log_score(f, j):
    """-log f_j; ``inf`` when the materialized category had probability 0."""
    f = _as_probs(f)
    fj = f.probs[_check_outcome(f, j)]
    return math.inf if fj == 0.0 else 0.0 - math.log(fj)


def spherical(f, j):
    """-f_j / ||f||_2, bounded in [-1, 0]."""
    f = _as_probs(f)
    k = _check_outcome(f, j)
    return float(-f.probs[k] / np.linalg.norm(f.probs))


def rps(f, j):
    """Ranked probability score over index order, normalized by m - 1.

    For two categories this coincides with :func:`brier`.
    """
    f = _as_probs(f)
    k = _check_outcome(f, j)
    cum = np.cumsum(f.probs)[:-1]
    step = (np.arange(f.m - 1) >= k).astype(float)
    d = cum - step
    return float(np.dot(d, d) / (f.m - 1))


_SCORERS = {"brier": brier, "log": log_score, "spherical": spherical, "rps": rps}


def get_rule(rule):
    try:
        return _SCORERS[rule]
    except KeyError:
        raise ValidationError(f"unknown categorical rule {rule!r}; choose from {RULES}") from None


def score(rule, f, j):
    return get_rule(rule)(f, j)


def expected_score(rule, f, p):
    """sum_j p_j S(f, j): the exact expectation when outcomes follow ``p``.

    Categories with p_j = 0 contribute nothing, even where S(f, j) is infinite.
    """
    f, p = _as_probs(f), _as_probs(p)
    if f.m != p.m:
        raise ValidationError(f"forecast has {f.m} categories, target has {p.m}")
    scorer = get_rule(rule)
    total = 0.0
    for j in range(1, f.m + 1):
        pj = p.probs[j - 1]
        if pj > 0.0:
            total += pj * scorer(f, j)
    return total


def expected_brier_closed_form(f, p):
    """(1/m) (||f - p||**2 + sum p_i (1 - p_i))."""
    f, p = _as_probs(f), _as_probs(p)
    g = f.probs - p.probs
    return float((np.dot(g, g) + np.sum(p.probs * (1.0 - p.probs))) / f.m)


def compare(score_a, score_b, tol=TIE_TOL):
    """'a' or 'b' for the lower (preferred) score, 'indifferent' within ``tol``."""
    if abs(score_a - score_b) <= tol or score_a == score_b:
        return "indifferent"
    return "a" if score_a < score_b else "b"


# ---------------------------------------------------------------------------
# binary diagnostics
# ---------------------------------------------------------------------------


def _check_p(p):
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    return 1.0 - p


def _check_gap_domain(p, gamma):
    q = _check_p(p)
    if not 0.0 < gamma < min(p, q):
        raise DomainError(f"need 0 < gamma < min(p, q) = {min(p, q):.9g}, got gamma={gamma}")
    return q


def binary_forecast(p, gamma):
    q = _check_p(p)
    if not abs(gamma) < min(p, q):
        raise DomainError(f"need |gamma| < min(p, q) = {min(p, q):.9g}, got gamma={gamma}")
    return ProbVector([p + gamma, q - gamma])


def expected_log_binary(p, gamma):
    """Expected log score of (p + gamma, q - gamma) under target (p, q)."""
    q = _check_p(p)
    if not (0.0 < p + gamma < 1.0 and 0.0 < q - gamma < 1.0):
        raise DomainError(f"gamma={gamma} leaves the open simplex for p={p}")
    return -p * math.log(p + gamma) - q * math.log(q - gamma)


def binary_entropy(p, gamma):
    """Entropy of the forecast (p + gamma, q - gamma); both entries must lie in (0, 1)."""
    q = _check_p(p)
    if not (0.0 < p + gamma < 1.0 and 0.0 < q - gamma < 1.0):
        raise DomainError(f"gamma={gamma} leaves the open simplex for p={p}")
    return entropy_categorical(ProbVector([p + gamma, q - gamma]))


def expected_ls_gap(p, gamma):
    """E[LS(f+)] - E[LS(f-)] for f+- = (p +- gamma, q -+ gamma), 0 < gamma < min(p, q).

    Positive when p > q, i.e. the log rule prefers the cautious f-.
    """
    q = _check_gap_domain(p, gamma)
    # log differences make the two terms cancel exactly when p == q
    return p * (math.log(p - gamma) - math.log(p + gamma)) + q * (math.log(q + gamma) - math.log(q - gamma))


def expected_ls_gap_derivative(p, gamma):
    """d/dgamma of :func:`expected_ls_gap`: 2 gamma^2 (p^2 - q^2) / ((p^2 - gamma^2)(q^2 - gamma^2))."""
    q = _check_gap_domain(p, gamma)
    g2 = gamma * gamma
    return 2.0 * g2 * (p * p - q * q) / ((p * p - g2) * (q * q - g2))


def expected_log_binary_derivative(p, gamma):
    """d/dgamma of the expected log score: gamma / ((p + gamma)(q - gamma))."""
    q = _check_p(p)
    return gamma / ((p + gamma) * (q - gamma))


def entropy_gap(p, gamma):
    """h(gamma) - h(-gamma); negative for 0 < gamma < q < p."""
    q = _check_p(p)
    if not abs(gamma) < min(p, q):
        raise DomainError(f"need |gamma| < min(p, q) = {min(p, q):.9g}, got gamma={gamma}")
    return binary_entropy(p, gamma) - binary_entropy(p, -gamma)


def h_indifference(p, gamma1, gamma2):
    """E[LS(f1)] - E[LS(f2)] for f1 = (p + gamma1, q - gamma1), f2 = (p - gamma2, q + gamma2).

    Negative values mean the log rule prefers f1.
    """
    q = _check_p(p)
    if not (0.0 < p + gamma1 < 1.0 and 0.0 < q - gamma1 < 1.0):
        raise DomainError(f"gamma1={gamma1} leaves the open simplex for p={p}")
    if not (0.0 < p - gamma2 < 1.0 and 0.0 < q + gamma2 < 1.0):
        raise DomainError(f"gamma2={gamma2} leaves the open simplex for p={p}")
    return p * math.log((p - gamma2) / (p + gamma1)) + q * math.log((q + gamma2) / (q - gamma1))


class BracketError(NumericalError):
    def __init__(self, message, endpoints=None):
        super().__init__(message)
        self.endpoints = endpoints


class ConvergenceError(NumericalError):
    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


def bisect(func, lo, hi, tol=1e-12, max_iter=200):
    """Root of ``func`` on [lo, hi] given func(lo) < 0 < func(hi).

    Stops once |func(mid)| < tol.  Raises :class:`BracketError` when the
    endpoint signs are wrong and :class:`ConvergenceError` (carrying the best
    point) after ``max_iter`` halvings.
    """
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    f_lo, f_hi = func(lo), func(hi)
    if not (f_lo < 0.0 < f_hi):
        raise BracketError(
            f"no sign change: f({lo:.9g})={f_lo:.3e}, f({hi:.9g})={f_hi:.3e}", (f_lo, f_hi)
        )
    best, best_res = lo, abs(f_lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = func(mid)
        if abs(f_mid) < best_res:
            best, best_res = mid, abs(f_mid)
        if abs(f_mid) < tol:
            return mid
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError(
        f"bisection did not reach |f| < {tol:g} in {max_iter} iterations "
        f"(best |f|={best_res:.3e} at {best:.17g})",
        best=best,
        residual=best_res,
    )


def gamma_star(p, gamma2, tol=1e-12):
    """Indifference point gamma* in (0, gamma2) where H(gamma*, gamma2) = 0.

    Requires 0 < gamma2 < q < p.  Below gamma* the log rule agrees with the
    Brier score in preferring f1; above it the two rules disagree.
    """
    q = _check_p(p)
    if not 0.0 < gamma2 < q < p:
        raise DomainError(f"need 0 < gamma2 < q < p, got p={p}, gamma2={gamma2}")
    return bisect(lambda g1: h_indifference(p, g1, gamma2), 0.0, gamma2, tol=tol)


def cos_angle(p, gamma):
    """Cosine of the angle between forecast (p + gamma, q - gamma) and target (p, q)."""
    f = binary_forecast(p, gamma)
    q = 1.0 - p
    p_norm2 = p * p + q * q
    return (p_norm2 + gamma * (p - q)) / (math.sqrt(p_norm2) * float(np.linalg.norm(f.probs)))


def cos_angle_derivative(p, gamma):
    """Closed form d C / d gamma = -gamma / (||p|| ||f||**3)."""
    f = binary_forecast(p, gamma)
    q = 1.0 - p
    return -gamma / (math.sqrt(p * p + q * q) * float(np.linalg.norm(f.probs)) ** 3)
