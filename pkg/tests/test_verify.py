import json

import numpy as np
import pytest

from scorelab import verify as vf
from scorelab.categorical import BracketError
from scorelab.core import ValidationError, gaussian_density, skewed_mixture
from scorelab.continuous import h_functional_density
from scorelab.perturb import PerturbationShape, make_odd_perturbation, max_feasible_epsilon

SMALL = vf.SweepConfig(steps=3, weights=(0.7,), mus=(1.0,), eps_fractions=(0.5,), n=1025)


@pytest.fixture(scope="module")
def binary_cases():
    return vf.verify_binary()


@pytest.fixture(scope="module")
def density_cases():
    return vf.verify_density(SMALL)


class TestVerdicts:
    def test_preference(self):
        assert vf.preference_verdict(1e-10, 1e-12) == vf.HOLDS
        assert vf.preference_verdict(5e-12, 1e-12) == vf.INDIFFERENT
        assert vf.preference_verdict(-1e-10, 1e-12) == vf.VIOLATED

    def test_preference_rounding_floor(self):
        assert vf.preference_verdict(-1e-16, 1e-18) == vf.INDIFFERENT

    def test_equality(self):
        assert vf.equality_verdict(0.0, 1e-15, 1.0) == vf.HOLDS
        assert vf.equality_verdict(1e-15, 1e-18, 1.0) == vf.INDIFFERENT
        assert vf.equality_verdict(1e-9, 1e-12, 1.0) == vf.VIOLATED


class TestConfig:
    @pytest.mark.parametrize("kw", [{"steps": 2}, {"tolerance": 0.0}, {"weights": (0.4,)}, {"eps_fractions": (1.0,)}])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            vf.SweepConfig(**kw)

    def test_as_dict_is_json(self):
        json.dumps(vf.SweepConfig().as_dict())


class TestBinary:
    def test_no_violations(self, binary_cases):
        assert vf.violations(binary_cases) == []

    def test_case_count(self, binary_cases):
        pg = {(c.inputs["p"], c.inputs["gamma"]) for c in binary_cases if c.inputs["p"] > 0.5}
        assert len(pg) >= 81

    def test_anchor_point_all_hold(self):
        cases = vf.check_binary_point(0.7, 0.2)
        checked = [c for c in cases if c.verdict != vf.OUT_OF_HYPOTHESIS]
        assert {c.proposition for c in checked} >= {
            "binary.brier_sign_indifference", "binary.ls_prefers_cautious", "binary.entropy_cautious_higher",
            "binary.spherical_prefers_confident", "binary.ls_monotone", "binary.gamma_star",
            "binary.brier_log_disagree", "binary.entropy_threshold",
        }
        for c in checked:
            assert c.verdict == vf.HOLDS, c
            assert c.margin >= 0.0

    def test_symmetric_line_indifferent(self, binary_cases):
        sym = [c for c in binary_cases if c.inputs["p"] == 0.5 and c.proposition != "binary.brier_sign_indifference"]
        assert sym and all(c.verdict == vf.INDIFFERENT for c in sym)

    def test_disagreement_recorded(self, binary_cases):
        dis = [c for c in binary_cases if c.proposition == "binary.brier_log_disagree"]
        for c in dis:
            assert c.values["brier_f1"] < c.values["brier_f2"]
            assert c.values["h"] > 0.0

    def test_beyond_threshold_not_asserted(self, binary_cases):
        beyond = [c for c in binary_cases if c.proposition == "binary.entropy_beyond_threshold"]
        assert beyond and all(c.verdict == vf.OUT_OF_HYPOTHESIS for c in beyond)

    def test_tiny_tolerance_gives_indifference_not_violation(self):
        cases = vf.verify_binary(vf.SweepConfig(tolerance=1e-18))
        assert not vf.violations(cases)
        assert any(c.verdict == vf.INDIFFERENT for c in cases)

    def test_records_reproducible(self):
        a = [c.to_record() for c in vf.verify_binary(vf.SweepConfig(steps=3))]
        b = [c.to_record() for c in vf.verify_binary(vf.SweepConfig(steps=3))]
        assert json.dumps(a) == json.dumps(b)

    def test_invalid_point(self):
        with pytest.raises(ValidationError):
            vf.check_binary_point(0.4, 0.1)


class TestDensity:
    def test_no_violations(self, density_cases):
        assert vf.violations(density_cases) == []

    def test_symmetric_control(self, density_cases):
        sym = [c for c in density_cases if c.proposition == "density.symmetric_indifference"]
        assert sym
        for c in sym:
            assert c.verdict == vf.INDIFFERENT
            assert abs(c.values["ls_gap"]) <= 1e-10

    @pytest.mark.parametrize("kind", ["bump", "sine", "tanh-step"])
    def test_w07_half_eps_all_hold(self, kind):
        p = skewed_mixture(0.7, 1.0)
        shape = next(s for s in vf.DEFAULT_SHAPES if s.kind == kind)
        g = make_odd_perturbation(shape, 0.5 * max_feasible_epsilon(shape, p), p)
        for c in vf.check_density_point(p, g):
            assert c.verdict == vf.HOLDS, c

    def test_refinement_flips_nothing(self):
        coarse = vf.verify_density(SMALL)
        fine = vf.verify_density(SMALL, n=2 * SMALL.n - 1)
        assert [c.verdict for c in coarse] == [c.verdict for c in fine]

    def test_refinement_drift_small(self):
        assert vf.refinement_drift(SMALL) < vf.REFINEMENT_TOL


@pytest.fixture(scope="module")
def setup():
    p = skewed_mixture(0.7, 1.0)
    shape = PerturbationShape("bump", 1.0, 0.7)
    g2 = make_odd_perturbation(shape, 0.8 * max_feasible_epsilon(shape, p), p)
    return p, g2


class TestDensityGammaStar:
    def test_root(self, setup):
        p, g2 = setup
        c = vf.gamma_star_density(p, g2)
        assert 0.0 < c < 1.0
        assert abs(h_functional_density(p, g2.scaled(c), g2)) < 1e-12

    def test_two_sided(self, setup):
        p, g2 = setup
        c = vf.gamma_star_density(p, g2)
        assert h_functional_density(p, g2.scaled(min(c + 0.05, 1.0)), g2) > 0.0
        assert h_functional_density(p, g2.scaled(max(c - 0.05, 0.0)), g2) < 0.0

    def test_symmetric_target_bracket_failure(self):
        p = gaussian_density()
        shape = PerturbationShape("bump", 1.0, 0.7)
        g2 = make_odd_perturbation(shape, 0.5 * max_feasible_epsilon(shape, p), p)
        with pytest.raises(BracketError) as info:
            vf.gamma_star_density(p, g2)
        h0, h1 = info.value.endpoints
        # the upper endpoint is the E[LS] gap, which vanishes for an even target
        assert abs(h1) < 1e-15
        assert h0 < 0.0


def test_summarize_counts(binary_cases):
    table = vf.summarize(binary_cases)
    assert sum(sum(row.values()) for row in table.values()) == len(binary_cases)
    assert list(table)[0] == "binary.brier_sign_indifference"


def test_derivative_checks_at_anchor():
    for c in vf.derivative_checks(0.7, 0.1):
        assert c.verdict == vf.HOLDS
