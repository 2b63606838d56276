import numpy as np
import pytest

from scorelab.core import DELTA_MARGIN, DomainError, GridDensity, ValidationError, uniform_density
from scorelab.perturb import (
    SHAPES,
    PerturbationShape,
    make_binary_pair,
    make_odd_perturbation,
    max_feasible_epsilon,
    parse_shape_text,
)


class TestBinaryPair:
    def test_values(self):
        plus, minus = make_binary_pair(0.7, 0.1)
        np.testing.assert_allclose(plus.probs, [0.8, 0.2], atol=1e-15)
        np.testing.assert_allclose(minus.probs, [0.6, 0.4], atol=1e-15)

    def test_zero(self):
        plus, minus = make_binary_pair(0.7, 0.0)
        assert plus == minus

    def test_bound_named(self):
        with pytest.raises(DomainError, match="< q"):
            make_binary_pair(0.7, 0.31)
        with pytest.raises(DomainError, match="< p"):
            make_binary_pair(0.2, 0.25)


@pytest.mark.parametrize("kind", SHAPES)
class TestShapes:
    def test_exactly_odd(self, kind, normal):
        w = PerturbationShape(kind, 1.0, 0.7).on_grid(normal.grid)
        assert np.array_equal(w, -w[::-1])

    def test_bounded_and_signed(self, kind, normal):
        w = PerturbationShape(kind, 1.0, 0.7).on_grid(normal.grid)
        assert np.max(np.abs(w)) <= 1.0
        assert np.all(w[normal.x > 0] <= 0.0)

    def test_feasible_boundary(self, kind, skewed):
        shape = PerturbationShape(kind, 1.0, 0.7)
        eps = max_feasible_epsilon(shape, skewed)
        assert eps > 0.0
        g = make_odd_perturbation(shape, eps, skewed)
        assert g.sign_constrained
        with pytest.raises(DomainError, match="infeasible"):
            make_odd_perturbation(shape, 1.01 * eps, skewed)

    def test_forecasts_need_no_renormalization(self, kind, skewed):
        shape = PerturbationShape(kind, 1.0, 0.7)
        g = make_odd_perturbation(shape, 0.9 * max_feasible_epsilon(shape, skewed), skewed)
        for sign in (1.0, -1.0):
            v = skewed.values + sign * g.values
            assert abs(GridDensity(skewed.grid, v).integral() - 1.0) < 1e-12
            assert np.all(v > 0.0)

    def test_scalar_path_closure(self, kind, skewed):
        shape = PerturbationShape(kind, 1.0, 0.7)
        g = make_odd_perturbation(shape, max_feasible_epsilon(shape, skewed), skewed)
        for c in np.linspace(0.0, 1.0, 11):
            g.scaled(c).check_valid(skewed)

    def test_text_round_trip(self, kind):
        shape = PerturbationShape(kind, 1.25, 0.3)
        back, eps = parse_shape_text(shape.to_text(epsilon=0.0123))
        assert back == shape and eps == 0.0123


def test_zero_epsilon(skewed, bump):
    assert not np.any(make_odd_perturbation(bump, 0.0, skewed).values)


def test_uniform_target_epsilon():
    p = uniform_density(-2.0, 2.0, 401)
    shape = PerturbationShape("sine", width=1.0)
    w_max = np.max(np.abs(shape.on_grid(p.grid)))
    assert max_feasible_epsilon(shape, p) == pytest.approx(0.25 * (1 - DELTA_MARGIN) / w_max, rel=1e-14)


def test_epsilon_linear_in_height(bump):
    # doubling the target height on a half-width grid doubles the feasible epsilon
    wide = uniform_density(-4.0, 4.0, 401)
    narrow = uniform_density(-2.0, 2.0, 401)
    shape = PerturbationShape("tanh-step", center=0.5, width=0.5)
    ratio = max_feasible_epsilon(shape, narrow) / max_feasible_epsilon(shape, wide)
    w_wide = np.abs(shape.on_grid(wide.grid))
    w_narrow = np.abs(shape.on_grid(narrow.grid))
    assert ratio == pytest.approx(2.0 * w_wide.max() / w_narrow.max(), rel=1e-12)


def test_vanishing_shape_rejected():
    p = uniform_density(-20.0, 20.0, 5)
    shape = PerturbationShape("sine", width=5.0)
    with pytest.raises(ValidationError, match="vanishes"):
        max_feasible_epsilon(shape, p)


def test_negative_epsilon(skewed, bump):
    with pytest.raises(ValidationError):
        make_odd_perturbation(bump, -0.1, skewed)


def test_asymmetric_grid_rejected(bump):
    with pytest.raises(ValidationError, match="symmetric"):
        bump.on_grid(uniform_density(0.0, 1.0).grid)


@pytest.mark.parametrize(
    "text,match",
    [("shape bump", "line 1"), ("shape = bump\ncolor = red", "unknown"), ("shape = wave", "unknown shape")],
)
def test_parse_errors(text, match):
    with pytest.raises(ValidationError, match=match):
        parse_shape_text(text)
