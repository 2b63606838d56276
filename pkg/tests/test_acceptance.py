"""Acceptance criteria, one test each.

Every test records a one-line PASS/FAIL verdict; the lines are printed in the
pytest terminal summary (see conftest.py) and when this file is run directly.
"""

import json
import math
import time

import numpy as np
import pytest

from scorelab import categorical as cat
from scorelab import cli, continuous as cont, verify as vf
from scorelab.core import GridDensity, ProbVector, gaussian_density, skewed_mixture, uniform_density
from scorelab.estimate import default_family, min_score_fit
from scorelab.perturb import make_odd_perturbation, max_feasible_epsilon

RESULTS = {}


def record(key, ok, detail):
    RESULTS[key] = (bool(ok), detail)
    assert ok, detail


def _run_cli(argv, report):
    code = cli.main(argv + ["--report", str(report)])
    return code, cli.read_report(report)


# 1 -------------------------------------------------------------------------

BINARY_PROPS = {
    "binary.brier_sign_indifference",
    "binary.ls_prefers_cautious",
    "binary.entropy_cautious_higher",
    "binary.ls_monotone",
    "binary.spherical_prefers_confident",
    "binary.entropy_threshold",
    "binary.gamma_star",
}


def test_criterion_1_binary_suite(tmp_path, capsys):
    start = time.perf_counter()
    code, report = _run_cli(["verify", "--suite", "binary"], tmp_path / "b.json")
    elapsed = time.perf_counter() - start
    capsys.readouterr()
    recs = report["records"]
    covered = {r["proposition"] for r in recs}
    bad = [r for r in recs if r["proposition"] in BINARY_PROPS and r["verdict"] == "violated"]
    pg = {(r["inputs"]["p"], r["inputs"]["gamma"]) for r in recs if r["inputs"]["p"] > 0.5}
    brier = [r for r in recs if r["proposition"] == "binary.brier_sign_indifference"]
    brier_max = max(abs(r["values"]["brier_plus"] - r["values"]["brier_minus"]) for r in brier)
    ok = code == 0 and not bad and BINARY_PROPS <= covered and len(pg) >= 81 and brier_max <= 1e-15 and elapsed < 5.0
    record(
        1, ok,
        f"{len(pg)} (p,gamma) cases, {len(bad)} violated, max Brier sign diff {brier_max:.2e}, {elapsed:.2f} s",
    )


# 2 -------------------------------------------------------------------------


def test_criterion_2_gamma_star_anchor():
    g = cat.gamma_star(0.7, 0.2)
    h = cat.h_indifference(0.7, g, 0.2)
    lo, hi = cat.h_indifference(0.7, 0.15, 0.2), cat.h_indifference(0.7, 0.17, 0.2)
    ok = 0.15 < g < 0.17 and abs(h) < 1e-12 and lo < 0.0 < hi
    record(2, ok, f"gamma*={g:.12f}, |H|={abs(h):.2e}, H(0.15)={lo:.6f}, H(0.17)={hi:.6f}")


# 3 -------------------------------------------------------------------------


def test_criterion_3_derivative_identities():
    config = vf.SweepConfig()
    h = vf.FD_STEP
    worst = {"gap": (0.0, None), "cos": (0.0, None)}
    for p in np.round(np.linspace(config.p_lo, config.p_hi, config.steps), 12):
        q = 1.0 - p
        for k in range(1, config.steps + 1):
            g = k / (config.steps + 1) * q
            for c in vf.derivative_checks(float(p), g, h):
                key = "gap" if c.proposition == "binary.ls_gap_derivative" else "cos"
                if c.values["rel_error"] > worst[key][0]:
                    worst[key] = (c.values["rel_error"], f"({float(p):.2f}, {g:.3f})")
    ok = worst["gap"][0] < 1e-6 and worst["cos"][0] < 1e-6
    record(
        3, ok,
        f"max rel error: E[LS] gap derivative {worst['gap'][0]:.3e} at (p, gamma)={worst['gap'][1]}, "
        f"dC/dgamma {worst['cos'][0]:.3e} at {worst['cos'][1]} (limit 1e-6, step {h:g})",
    )


# 4 -------------------------------------------------------------------------

DENSITY_PROPS = {
    "density.ls_prefers_cautious",
    "density.entropy_plus_lower",
    "density.spherical_prefers_confident",
    "density.ls_monotone",
    "density.quadratic_sign_indifference",
    "density.crps_sign_indifference",
    "density.mse_sign_indifference",
}


def test_criterion_4_density_suite(tmp_path, capsys):
    start = time.perf_counter()
    code, report = _run_cli(["verify", "--suite", "density", "--n", "2049"], tmp_path / "d.json")
    elapsed = time.perf_counter() - start
    capsys.readouterr()
    recs = report["records"]
    skewed = [r for r in recs if r["proposition"] in DENSITY_PROPS]
    bad = [r for r in skewed if r["verdict"] == "violated"]
    combos = {(r["inputs"]["weight"], r["inputs"]["mu"], r["inputs"]["shape"], r["inputs"]["eps_fraction"]) for r in skewed}
    sign = [r for r in skewed if r["proposition"].endswith("sign_indifference")]
    sign_max = max(abs(list(r["values"].values())[0] - list(r["values"].values())[1]) for r in sign)
    sym = [r for r in recs if r["proposition"] == "density.symmetric_indifference"]
    sym_max = max(abs(r["values"]["ls_gap"]) for r in sym)
    ok = (
        code == 0 and not bad and len(combos) == 3 * 2 * 3 * 3 and DENSITY_PROPS <= {r["proposition"] for r in skewed}
        and sign_max <= 1e-12 and sym and sym_max <= 1e-10 and elapsed < 60.0
    )
    record(
        4, ok,
        f"{len(combos)} target/shape/epsilon combos, {len(bad)} violated, max sign diff {sign_max:.2e}, "
        f"symmetric |E[LS] gap| <= {sym_max:.2e}, {elapsed:.2f} s",
    )


# 5 -------------------------------------------------------------------------


def test_criterion_5_crps_identity_and_anchors():
    p = skewed_mixture(0.7, 1.0)
    worst = 0.0
    for shape in vf.DEFAULT_SHAPES:
        g = make_odd_perturbation(shape, 0.5 * max_feasible_epsilon(shape, p), p)
        pair = cont.DensityForecastPair(p, g)
        for F in (pair.plus, pair.minus, p, gaussian_density()):
            worst = max(worst, abs(cont.expected_crps(F, p) - cont.expected_crps_direct(F, p)))
    u = uniform_density(0.0, 1.0)
    a0, a5 = cont.crps(u, 0.0), cont.crps(u, 0.5)
    normal = gaussian_density()
    s = cont.expected_crps(normal, normal)
    ok = worst <= 1e-6 and abs(a0 - 1 / 3) <= 1e-4 and abs(a5 - 1 / 12) <= 1e-4 and abs(s - 1 / math.sqrt(math.pi)) <= 1e-4
    record(5, ok, f"identity max diff {worst:.2e}; CRPS(U,0)={a0:.9f}, CRPS(U,0.5)={a5:.9f}, int P(1-P)={s:.9f}")


# 6 -------------------------------------------------------------------------


def _density_candidates(p, rng, count):
    shapes = list(vf.DEFAULT_SHAPES)
    out = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            out.append(gaussian_density(rng.uniform(-1.5, 1.5), rng.uniform(0.6, 1.8)))
        elif kind == 1:
            out.append(skewed_mixture(rng.uniform(0.05, 0.95), rng.uniform(0.2, 2.0)))
        else:
            shape = shapes[i % len(shapes)]
            g = make_odd_perturbation(shape, rng.uniform(0.05, 1.0) * max_feasible_epsilon(shape, p), p)
            sign = 1.0 if rng.random() < 0.5 else -1.0
            out.append(GridDensity(p.grid, p.values + sign * g.values))
    return out


def test_criterion_6_strict_propriety():
    rng = np.random.Generator(np.random.Philox(42))
    worst = {}
    for rule in cat.RULES:
        margins = []
        for _ in range(100):
            m = int(rng.integers(2, 6))
            p = ProbVector(rng.dirichlet(np.ones(m)))
            f = ProbVector(rng.dirichlet(np.ones(m)))
            margins.append(cat.expected_score(rule, f, p) - cat.expected_score(rule, p, p))
        worst[f"categorical {rule}"] = min(margins)
    p = skewed_mixture(0.7, 1.0)
    cands = _density_candidates(p, rng, 100)
    for rule in cont.RULES:
        base = cont.expected_score(rule, p, p)
        worst[f"density {rule}"] = min(cont.expected_score(rule, f, p) - base for f in cands)
    ok = all(v > 1e-8 for v in worst.values())
    lowest = min(worst, key=worst.get)
    record(6, ok, f"smallest margin {worst[lowest]:.3e} ({lowest}); all {len(worst)} rule families > 1e-8")


# 7 -------------------------------------------------------------------------


def test_criterion_7_monte_carlo():
    p = skewed_mixture(0.7, 1.0)
    shape = vf.DEFAULT_SHAPES[0]
    g = make_odd_perturbation(shape, 0.5 * max_feasible_epsilon(shape, p), p)
    forecasts = {"p+gamma": GridDensity(p.grid, p.values + g.values), "N(0.2,1.3)": gaussian_density(0.2, 1.3)}
    worst = 0.0
    for rule in cont.RULES:
        for name, f in forecasts.items():
            mean, se = cont.monte_carlo_expected(rule, f, p, size=1_000_000, seed=42)
            z = abs(mean - cont.expected_score(rule, f, p)) / se
            worst = max(worst, z)
    record(7, worst < 4.0, f"largest |MC - expected| = {worst:.2f} standard errors over {len(cont.RULES)} rules x 2 forecasts")


# 8 -------------------------------------------------------------------------


def test_criterion_8_estimation():
    x = np.random.Generator(np.random.Philox(42)).normal(0.3, 1.2, 10_000)
    fit = min_score_fit(x, default_family("gaussian", x), "log")
    d_mu = abs(fit.params["mu"] - x.mean())
    d_sd = abs(fit.params["sigma"] - x.std())
    y = cont.sample_target(skewed_mixture(0.7, 1.5), 10_000, seed=42)
    fam = default_family("gaussian", y)
    s_log = min_score_fit(y, fam, "log").params["sigma"]
    s_crps = min_score_fit(y, fam, "crps").params["sigma"]
    ok = d_mu < 1e-3 and d_sd < 1e-3 and abs(s_log - s_crps) > 1e-2
    record(
        8, ok,
        f"MLE gaps mu {d_mu:.1e}, sigma {d_sd:.1e}; skewed data sigma log={s_log:.4f} crps={s_crps:.4f} "
        f"(diff {abs(s_log - s_crps):.4f})",
    )


# 9 -------------------------------------------------------------------------


def test_criterion_9_determinism(tmp_path, capsys):
    (tmp_path / "f.csv").write_text("f1,f2,f3\n0.5,0.3,0.2\n0.1,0.1,0.8\n")
    (tmp_path / "g.csv").write_text("f1,f2,f3\n0.3,0.4,0.3\n")
    (tmp_path / "o.csv").write_text("1\n3\n")
    d = gaussian_density()
    (tmp_path / "d.json").write_text(json.dumps({"lo": d.lo, "hi": d.hi, "n": d.n, "values": d.values.tolist()}))
    samples = np.random.Generator(np.random.Philox(1)).normal(0, 1, 500)
    (tmp_path / "s.csv").write_text("\n".join(repr(float(v)) for v in samples))
    t = lambda name: str(tmp_path / name)
    commands = {
        "score": ["score", "--rule", "rps", "--forecasts", t("f.csv"), "--outcomes", t("o.csv")],
        "rank": ["rank", "--rule", "log", "--forecasts", t("f.csv"), t("g.csv"), "--outcomes", t("o.csv")],
        "expected": ["expected", "--rule", "crps", "--forecast", t("d.json"), "--target", t("d.json")],
        "verify": ["verify", "--suite", "density", "--grid-steps", "3", "--n", "513"],
        "gamma-star": ["gamma-star", "--p", "0.8", "--gamma2", "0.1"],
        "estimate": ["estimate", "--family", "gaussian-mixture-2", "--rule", "crps", "--samples", t("s.csv"), "--n", "513"],
        "entropy": ["entropy", "--density", t("d.json")],
    }
    differing = []
    for name, argv in commands.items():
        blobs = []
        for i in range(2):
            path = t(f"{name}-{i}.json")
            assert cli.main(argv + ["--seed", "42", "--report", path]) == 0, name
            blobs.append(open(path, "rb").read())
        if blobs[0] != blobs[1]:
            differing.append(name)
    capsys.readouterr()
    record(9, not differing, f"{len(commands)} commands run twice; differing reports: {differing or 'none'}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
