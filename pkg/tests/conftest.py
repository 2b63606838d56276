import pytest

from scorelab.core import gaussian_density, skewed_mixture, uniform_density
from scorelab.continuous import DensityForecastPair
from scorelab.perturb import PerturbationShape, make_odd_perturbation, max_feasible_epsilon


@pytest.fixture(scope="session")
def normal():
    return gaussian_density()


@pytest.fixture(scope="session")
def unit_uniform():
    return uniform_density(0.0, 1.0)


@pytest.fixture(scope="session")
def skewed():
    return skewed_mixture(0.7, 1.0)


@pytest.fixture(scope="session")
def bump():
    return PerturbationShape("bump", center=1.0, width=0.7)


@pytest.fixture(scope="session")
def skewed_pair(skewed, bump):
    eps = 0.5 * max_feasible_epsilon(bump, skewed)
    return DensityForecastPair(skewed, make_odd_perturbation(bump, eps, skewed))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} - {detail}")
