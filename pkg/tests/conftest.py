import pytest

from markovlab.approx import projection_series, target_values
from markovlab.scenario import preset_scenario


@pytest.fixture(scope="session")
def cubic_scenario():
    """Three-branch cubic surface y^3 = (1 - x^2) y over x in [-1, 1]."""
    return preset_scenario("example-2-2")


@pytest.fixture(scope="session")
def cubic_set(cubic_scenario):
    return cubic_scenario.build_sample_set()


@pytest.fixture(scope="session")
def arcs_scenario():
    """Cube-root surface y^3 = 1 - x^2 over two arcs away from the origin."""
    return preset_scenario("example-2-3")


@pytest.fixture(scope="session")
def arcs_set(arcs_scenario):
    return arcs_scenario.build_sample_set()


@pytest.fixture(scope="session")
def exp_series(cubic_scenario, cubic_set):
    """Metric projections of exp(x) * y on the cubic set, levels 0..13."""
    values = target_values("exp-xy", cubic_set, cubic_scenario.relation)
    return projection_series(values, cubic_scenario.relation, cubic_set, 13)
