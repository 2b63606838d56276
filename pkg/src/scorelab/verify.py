"""Numerical verification sweeps for the rule-preference results.

Each check produces a :class:`VerificationCase` whose ``margin`` is signed so
that a positive value supports the claim.  Preference claims hold when the
margin exceeds ten times the tolerance, are ``indifferent`` when it is within
the tolerance band, and are ``violated`` only when the margin is below
``-tolerance``.  Equality claims hold when the discrepancy is within their
tolerance; a discrepancy above the tolerance but at the level of floating
point rounding is reported ``indifferent`` rather than violated.
"""

from dataclasses import asdict, dataclass
import math

import numpy as np

from . import categorical as cat
from .categorical import BracketError, ConvergenceError, bisect
from .continuous import (
    DensityForecastPair,
    expected_crps,
    expected_crps_direct,
    expected_log_density,
    expected_ls_gap_density,
    expected_quadratic,
    expected_spherical_density,
    mse_criterion,
    spherical_square_gap,
    spherical_square_gap_identity,
)
from .core import GridDensity, ValidationError, entropy_density, skewed_mixture, trapezoid
from .perturb import PerturbationShape, make_odd_perturbation, max_feasible_epsilon

HOLDS = "holds"
VIOLATED = "violated"
INDIFFERENT = "indifferent"
OUT_OF_HYPOTHESIS = "out-of-hypothesis"

_ROUNDOFF = 64 * np.finfo(float).eps
FD_STEP = 1e-5
FD_REL_TOL = 1e-6
SYMMETRIC_TOL = 1e-10
CRPS_IDENTITY_TOL = 1e-6

DEFAULT_SHAPES = (
    PerturbationShape("bump", center=1.0, width=0.7),
    PerturbationShape("sine", center=1.0, width=2.0),
    PerturbationShape("tanh-step", center=1.0, width=0.5),
)


@dataclass(frozen=True)
class SweepConfig:
    steps: int = 9
    tolerance: float = 1e-12
    exact_tolerance: float = 1e-15
    seed: int = 42
    p_lo: float = 0.55
    p_hi: float = 0.95
    weights: tuple = (0.55, 0.65, 0.75)
    mus: tuple = (0.5, 1.0)
    eps_fractions: tuple = (0.1, 0.5, 0.9)
    shapes: tuple = DEFAULT_SHAPES
    n: int = 2049
    half_width: float = 8.0
    include_symmetric: bool = True

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 3:
            raise ValidationError(f"steps must be an integer >= 3, got {self.steps}")
        if not self.tolerance > 0.0 or not self.exact_tolerance > 0.0:
            raise ValidationError("tolerances must be positive")
        if not 0.5 < self.p_lo <= self.p_hi < 1.0:
            raise ValidationError("need 0.5 < p_lo <= p_hi < 1")
        if any(not 0.5 < w < 1.0 for w in self.weights):
            raise ValidationError("skewed mixture weights must lie in (0.5, 1)")
        if any(not 0.0 < e < 1.0 for e in self.eps_fractions):
            raise ValidationError("epsilon fractions must lie in (0, 1)")

    @property
    def eq_tol(self):
        return min(self.tolerance, self.exact_tolerance)

    def as_dict(self):
        d = asdict(self)
        d["shapes"] = [asdict(s) for s in self.shapes]
        d["weights"] = list(self.weights)
        d["mus"] = list(self.mus)
        d["eps_fractions"] = list(self.eps_fractions)
        return d


@dataclass
class VerificationCase:
    proposition: str
    inputs: dict
    values: dict
    verdict: str
    margin: float

    def to_record(self):
        return {
            "proposition": self.proposition,
            "inputs": dict(self.inputs),
            "values": {k: float(v) for k, v in self.values.items()},
            "verdict": self.verdict,
            "margin": float(self.margin),
        }


def preference_verdict(margin, tol, scale=1.0):
    """The band is never narrower than rounding on quantities of size ``scale``."""
    band = max(tol, _ROUNDOFF * max(abs(scale), 1.0))
    if margin > 10.0 * band:
        return HOLDS
    if margin < -band:
        return VIOLATED
    return INDIFFERENT


def equality_verdict(diff, tol, scale):
    if diff <= tol:
        return HOLDS
    if diff <= _ROUNDOFF * max(scale, 1.0):
        return INDIFFERENT
    return VIOLATED


def _pref(prop, inputs, values, margin, tol):
    return VerificationCase(prop, inputs, values, preference_verdict(margin, tol), margin)


def _eq(prop, inputs, values, diff, tol, scale):
    return VerificationCase(prop, inputs, values, equality_verdict(diff, tol, scale), tol - diff)


def _rel_err(approx, exact):
    return abs(approx - exact) / max(abs(exact), 1e-300)


# ---------------------------------------------------------------------------
# binary
# ---------------------------------------------------------------------------


def _binary_ps(config):
    return [round(float(v), 12) for v in np.linspace(config.p_lo, config.p_hi, config.steps)]


def _fractions(config):
    return [(k + 1) / (config.steps + 1) for k in range(config.steps)]


def _symmetry_checks(p, g, inputs, tol, eq_tol):
    """Checks valid for any p: Brier sign indifference plus the three preference gaps."""
    f_plus = cat.binary_forecast(p, g)
    f_minus = cat.binary_forecast(p, -g)
    target = cat.ProbVector([p, 1.0 - p])
    out = []
    b_plus = cat.expected_score("brier", f_plus, target)
    b_minus = cat.expected_score("brier", f_minus, target)
    out.append(
        _eq(
            "binary.brier_sign_indifference", inputs,
            {"brier_plus": b_plus, "brier_minus": b_minus, "closed_form": g * g + p * (1 - p)},
            abs(b_plus - b_minus), eq_tol, abs(b_plus),
        )
    )
    ls_plus = cat.expected_score("log", f_plus, target)
    ls_minus = cat.expected_score("log", f_minus, target)
    out.append(
        _pref(
            "binary.ls_prefers_cautious", inputs,
            {"ls_plus": ls_plus, "ls_minus": ls_minus, "ls_gap": ls_plus - ls_minus},
            ls_plus - ls_minus, tol,
        )
    )
    h_plus = cat.entropy_categorical(f_plus)
    h_minus = cat.entropy_categorical(f_minus)
    out.append(
        _pref(
            "binary.entropy_cautious_higher", inputs,
            {"entropy_plus": h_plus, "entropy_minus": h_minus},
            h_minus - h_plus, tol,
        )
    )
    s_plus = cat.expected_score("spherical", f_plus, target)
    s_minus = cat.expected_score("spherical", f_minus, target)
    out.append(
        _pref(
            "binary.spherical_prefers_confident", inputs,
            {
                "spherical_plus": s_plus,
                "spherical_minus": s_minus,
                "cos_plus": cat.cos_angle(p, g),
                "cos_minus": cat.cos_angle(p, -g),
            },
            s_minus - s_plus, tol,
        )
    )
    return out


def _gamma_star_checks(p, g2, inputs, tol):
    out = []
    try:
        root = cat.gamma_star(p, g2, tol=tol)
        residual = abs(cat.h_indifference(p, root, g2))
        converged = True
    except ConvergenceError as exc:
        root, residual, converged = exc.best, exc.residual, False
    inside = 0.0 < root < g2
    left = [cat.h_indifference(p, root * k / 4.0, g2) for k in (1, 2, 3)]
    right = [cat.h_indifference(p, root + (g2 - root) * k / 4.0, g2) for k in (1, 2, 3)]
    side_margin = min(min(-h for h in left), min(right))
    values = {
        "gamma_star": root,
        "residual": residual,
        "h_left_mid": left[1],
        "h_right_mid": right[1],
        "h_at_zero": cat.h_indifference(p, 0.0, g2),
        "h_at_gamma2": cat.h_indifference(p, g2, g2),
    }
    if not inside:
        case = VerificationCase("binary.gamma_star", inputs, values, VIOLATED, -1.0)
    elif not converged:
        scale = p * abs(math.log(p - g2)) + (1 - p) * abs(math.log(1 - p + g2))
        case = VerificationCase(
            "binary.gamma_star", inputs, values, equality_verdict(residual, tol, scale), tol - residual
        )
    else:
        case = _pref("binary.gamma_star", inputs, values, side_margin, tol)
    out.append(case)

    # between gamma* and gamma2 the Brier score and the log rule disagree
    g1 = 0.5 * (root + g2)
    q = 1.0 - p
    bs1 = g1 * g1 + p * q
    bs2 = g2 * g2 + p * q
    h12 = cat.h_indifference(p, g1, g2)
    out.append(
        _pref(
            "binary.brier_log_disagree", {**inputs, "gamma1": g1},
            {"brier_f1": bs1, "brier_f2": bs2, "h": h12},
            min(bs2 - bs1, h12), tol,
        )
    )
    return out


def _threshold_checks(p, g, frac, inputs, tol):
    q = 1.0 - p
    thresh = 0.5 * (p - q)
    h1 = cat.binary_entropy(p, g)
    margins, values = [], {"entropy_f1": h1, "threshold": thresh}
    for name, g2 in (("frac", frac * thresh), ("edge", thresh)):
        h2 = cat.binary_entropy(p, -g2)
        values[f"entropy_f2_{name}"] = h2
        margins.append(h2 - h1)
    out = [_pref("binary.entropy_threshold", {**inputs, "gamma1": g, "gamma2_max": thresh}, values, min(margins), tol)]

    # beyond the threshold the ordering is not determined; record what happens
    g2 = thresh + frac * 0.98 * (p - thresh)
    h2 = cat.binary_entropy(p, -g2)
    out.append(
        VerificationCase(
            "binary.entropy_beyond_threshold",
            {**inputs, "gamma1": g, "gamma2": g2, "p_gt_3q": p > 3 * q},
            {"entropy_f1": h1, "entropy_f2": h2},
            OUT_OF_HYPOTHESIS,
            h2 - h1,
        )
    )
    return out


def derivative_checks(p, g, h=FD_STEP):
    """Closed-form derivatives of the E[LS] gap and of C(gamma) against central differences."""
    inputs = {"p": p, "gamma": g, "step": h}
    fd_gap = (cat.expected_ls_gap(p, g + h) - cat.expected_ls_gap(p, g - h)) / (2 * h)
    exact_gap = cat.expected_ls_gap_derivative(p, g)
    fd_cos = (cat.cos_angle(p, g + h) - cat.cos_angle(p, g - h)) / (2 * h)
    exact_cos = cat.cos_angle_derivative(p, g)
    e1 = _rel_err(fd_gap, exact_gap)
    e2 = _rel_err(fd_cos, exact_cos)
    return [
        VerificationCase(
            "binary.ls_gap_derivative", inputs,
            {"finite_difference": fd_gap, "closed_form": exact_gap, "rel_error": e1},
            HOLDS if e1 < FD_REL_TOL else VIOLATED, FD_REL_TOL - e1,
        ),
        VerificationCase(
            "binary.cos_derivative", inputs,
            {"finite_difference": fd_cos, "closed_form": exact_cos, "rel_error": e2},
            HOLDS if e2 < FD_REL_TOL else VIOLATED, FD_REL_TOL - e2,
        ),
    ]


def check_binary_point(p, gamma, config=None):
    """Every binary check at a single (p, gamma); monotonicity compares with gamma / 2."""
    config = config or SweepConfig()
    tol = config.tolerance
    q = 1.0 - p
    if not 0.0 < gamma < q < p:
        raise ValidationError(f"need 0 < gamma < q < p, got p={p}, gamma={gamma}")
    inputs = {"p": p, "gamma": gamma}
    cases = _symmetry_checks(p, gamma, inputs, tol, config.eq_tol)
    prev = 0.5 * gamma
    up = cat.expected_log_binary(p, gamma) - cat.expected_log_binary(p, prev)
    down = cat.expected_log_binary(p, -gamma) - cat.expected_log_binary(p, -prev)
    cases.append(
        _pref(
            "binary.ls_monotone", {**inputs, "gamma_prev": prev},
            {"increase_positive_side": up, "increase_negative_side": down},
            min(up, down), tol,
        )
    )
    cases.extend(_gamma_star_checks(p, gamma, inputs, tol))
    cases.extend(_threshold_checks(p, gamma, gamma / q, inputs, tol))
    return cases


def verify_binary(config=None):
    """Sweep (p, gamma) with 0 < gamma < q < p and check every binary claim."""
    config = config or SweepConfig()
    tol, eq_tol = config.tolerance, config.eq_tol
    cases = []
    for p in _binary_ps(config):
        q = 1.0 - p
        prev = 0.0
        for frac in _fractions(config):
            g = frac * q
            inputs = {"p": p, "gamma": g}
            cases.extend(_symmetry_checks(p, g, inputs, tol, eq_tol))
            up = cat.expected_log_binary(p, g) - cat.expected_log_binary(p, prev)
            down = cat.expected_log_binary(p, -g) - cat.expected_log_binary(p, -prev)
            cases.append(
                _pref(
                    "binary.ls_monotone", {**inputs, "gamma_prev": prev},
                    {"increase_positive_side": up, "increase_negative_side": down},
                    min(up, down), tol,
                )
            )
            cases.extend(_gamma_star_checks(p, g, inputs, tol))
            cases.extend(_threshold_checks(p, g, frac, inputs, tol))
            prev = g
    if config.include_symmetric:
        for frac in _fractions(config):
            g = frac * 0.5
            cases.extend(_symmetry_checks(0.5, g, {"p": 0.5, "gamma": g}, tol, eq_tol))
    return cases


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------


def gamma_star_density(p, gamma2, tol=1e-12):
    """Scale c* in (0, 1) with H(c* gamma2, gamma2) = 0 along the path c -> c gamma2.

    The endpoint signs H(0, gamma2) < -tol and H(gamma2, gamma2) > tol are
    checked first; a :class:`~scorelab.categorical.BracketError` carries both
    values.  For an even target H(gamma2, gamma2) vanishes and the bracket fails.
    """
    gamma2.check_valid(p)
    pv, gv, dx = p.values, gamma2.values, p.dx
    mass = pv > 0.0
    fixed = trapezoid(np.where(mass, pv * np.log(np.where(mass, pv - gv, 1.0)), 0.0), dx)

    def h(c):
        return fixed - trapezoid(np.where(mass, pv * np.log(np.where(mass, pv + c * gv, 1.0)), 0.0), dx)

    h0, h1 = h(0.0), h(1.0)
    # an endpoint within tol of zero is not a usable sign change
    if not (h0 < -tol and h1 > tol):
        raise BracketError(f"no sign change along c*gamma2: H(0)={h0:.3e}, H(1)={h1:.3e}", (h0, h1))
    return bisect(h, 0.0, 1.0, tol=tol)


def _h_path(p, gamma2, c):
    g1 = gamma2.scaled(c)
    integrand = p.values * (np.log(p.values - gamma2.values) - np.log(p.values + g1.values))
    return trapezoid(integrand, p.dx)


def _density_case(p, gamma, inputs, config):
    tol, eq_tol = config.tolerance, min(config.tolerance, 1e-12)
    pair = DensityForecastPair(p, gamma)
    plus, minus = pair.plus, pair.minus
    out = []

    gap = expected_ls_gap_density(pair)
    out.append(_pref("density.ls_prefers_cautious", inputs, {"ls_gap": gap}, gap, tol))

    h_plus, h_minus = entropy_density(plus), entropy_density(minus)
    out.append(
        _pref(
            "density.entropy_plus_lower", inputs,
            {"entropy_plus": h_plus, "entropy_minus": h_minus}, h_minus - h_plus, tol,
        )
    )

    s_plus = expected_spherical_density(plus, p)
    s_minus = expected_spherical_density(minus, p)
    out.append(
        _pref(
            "density.spherical_prefers_confident", inputs,
            {"spherical_plus": s_plus, "spherical_minus": s_minus}, s_minus - s_plus, tol,
        )
    )
    direct, ident = spherical_square_gap(pair), spherical_square_gap_identity(pair)
    out.append(
        _eq(
            "density.spherical_square_identity", inputs,
            {"direct": direct, "identity": ident}, abs(direct - ident), eq_tol, abs(direct),
        )
    )

    cs = [k / config.steps for k in range(config.steps + 1)]
    path = [expected_log_density(GridDensity(p.grid, p.values + c * gamma.values), p) for c in cs]
    steps = np.diff(path)
    out.append(
        _pref(
            "density.ls_monotone", {**inputs, "path_points": len(cs)},
            {"ls_at_zero": path[0], "ls_at_one": path[-1], "min_increase": float(steps.min())},
            float(steps.min()), tol,
        )
    )

    q_plus, q_minus = expected_quadratic(plus, p), expected_quadratic(minus, p)
    out.append(
        _eq(
            "density.quadratic_sign_indifference", inputs,
            {"quadratic_plus": q_plus, "quadratic_minus": q_minus},
            abs(q_plus - q_minus), eq_tol, abs(q_plus),
        )
    )
    c_plus, c_minus = expected_crps(plus, p), expected_crps(minus, p)
    out.append(
        _eq(
            "density.crps_sign_indifference", inputs,
            {"crps_plus": c_plus, "crps_minus": c_minus},
            abs(c_plus - c_minus), eq_tol, abs(c_plus),
        )
    )
    m_plus, m_minus = mse_criterion(pair, 1), mse_criterion(pair, -1)
    out.append(
        _eq(
            "density.mse_sign_indifference", inputs,
            {"mse_plus": m_plus, "mse_minus": m_minus}, abs(m_plus - m_minus), eq_tol, abs(m_plus),
        )
    )
    direct_crps = expected_crps_direct(plus, p)
    out.append(
        _eq(
            "density.crps_identity", inputs,
            {"integration_by_parts": c_plus, "nested": direct_crps},
            abs(c_plus - direct_crps), CRPS_IDENTITY_TOL, abs(c_plus),
        )
    )

    h0, h1 = _h_path(p, gamma, 0.0), _h_path(p, gamma, 1.0)
    out.append(
        _pref(
            "density.h_endpoints", inputs, {"h_at_zero": h0, "h_at_gamma2": h1}, min(-h0, h1), tol,
        )
    )
    out.append(_density_gamma_star(p, gamma, inputs, tol))
    return out


def check_density_point(p, gamma, config=None):
    """Every density check for one target and one valid sign-constrained perturbation."""
    config = config or SweepConfig()
    return _density_case(p, gamma, {"n": p.n}, config)


def _density_gamma_star(p, gamma, inputs, tol):
    try:
        c = gamma_star_density(p, gamma, tol=tol)
        converged = True
        residual = abs(_h_path(p, gamma, c))
    except BracketError as exc:
        return VerificationCase(
            "density.gamma_star", inputs,
            {"h_at_zero": exc.endpoints[0], "h_at_gamma2": exc.endpoints[1]}, VIOLATED, -1.0,
        )
    except ConvergenceError as exc:
        c, residual, converged = exc.best, exc.residual, False
    lo_c, hi_c = max(c - 0.05, 0.5 * c), min(c + 0.05, 0.5 * (c + 1.0))
    h_lo, h_hi = _h_path(p, gamma, lo_c), _h_path(p, gamma, hi_c)
    values = {"c_star": c, "residual": residual, "h_below": h_lo, "h_above": h_hi}
    if not 0.0 < c < 1.0:
        return VerificationCase("density.gamma_star", inputs, values, VIOLATED, -1.0)
    if not converged:
        return VerificationCase(
            "density.gamma_star", inputs, values, equality_verdict(residual, tol, 1.0), tol - residual
        )
    return _pref("density.gamma_star", inputs, values, min(-h_lo, h_hi), tol)


def _targets(config, n=None):
    n = n or config.n
    L = config.half_width
    for w in config.weights:
        for mu in config.mus:
            yield w, mu, skewed_mixture(w, mu, -L, L, n)


def verify_density(config=None, n=None):
    """Sweep left-heavy mixtures x shapes x epsilon fractions; symmetric control last."""
    config = config or SweepConfig()
    n = n or config.n
    cases = []
    for w, mu, p in _targets(config, n):
        for shape in config.shapes:
            eps_max = max_feasible_epsilon(shape, p)
            for frac in config.eps_fractions:
                gamma = make_odd_perturbation(shape, frac * eps_max, p)
                inputs = {
                    "weight": w, "mu": mu, "shape": shape.kind,
                    "center": shape.center, "width": shape.width,
                    "eps_fraction": frac, "epsilon": frac * eps_max, "n": n,
                }
                cases.extend(_density_case(p, gamma, inputs, config))
    if config.include_symmetric:
        L = config.half_width
        for mu in config.mus:
            p = skewed_mixture(0.5, mu, -L, L, n)
            for shape in config.shapes:
                eps_max = max_feasible_epsilon(shape, p)
                for frac in config.eps_fractions:
                    gamma = make_odd_perturbation(shape, frac * eps_max, p)
                    pair = DensityForecastPair(p, gamma)
                    gap = expected_ls_gap_density(pair)
                    s_gap = expected_spherical_density(pair.minus, p) - expected_spherical_density(pair.plus, p)
                    inputs = {"weight": 0.5, "mu": mu, "shape": shape.kind, "eps_fraction": frac, "n": n}
                    cases.append(
                        VerificationCase(
                            "density.symmetric_indifference", inputs,
                            {"ls_gap": gap, "spherical_gap": s_gap},
                            INDIFFERENT if max(abs(gap), abs(s_gap)) <= SYMMETRIC_TOL else VIOLATED,
                            SYMMETRIC_TOL - max(abs(gap), abs(s_gap)),
                        )
                    )
    return cases


def refinement_drift(config=None):
    """Largest relative change of the density E[LS] gap when n -> 2n - 1.

    Evaluated at the middle epsilon fraction for every target and shape.
    """
    config = config or SweepConfig()
    frac = sorted(config.eps_fractions)[len(config.eps_fractions) // 2]
    fine_n = 2 * config.n - 1
    worst = 0.0
    for (_, _, p), (_, _, pf) in zip(_targets(config), _targets(config, fine_n)):
        for shape in config.shapes:
            eps = frac * max_feasible_epsilon(shape, p)
            coarse = expected_ls_gap_density(DensityForecastPair(p, make_odd_perturbation(shape, eps, p)))
            fine = expected_ls_gap_density(DensityForecastPair(pf, make_odd_perturbation(shape, eps, pf)))
            worst = max(worst, _rel_err(coarse, fine))
    return worst


#: Relative drift of the density gap under refinement that flags a quadrature failure.
REFINEMENT_TOL = 1e-6


def summarize(cases):
    """``{proposition: {verdict: count}}`` in first-seen order."""
    table = {}
    for case in cases:
        row = table.setdefault(case.proposition, {HOLDS: 0, INDIFFERENT: 0, VIOLATED: 0, OUT_OF_HYPOTHESIS: 0})
        row[case.verdict] += 1
    return table


def violations(cases):
    return [c for c in cases if c.verdict == VIOLATED]
