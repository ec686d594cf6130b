import pytest

from roadimp.scenario import load_scenario
from roadimp.structure import StructureFunction

SHORT_LABELS = (4, 6, 10, 11)


@pytest.fixture(scope="session")
def short_system():
    return StructureFunction.from_labeled_paths([(4, 6, 11), (4, 10, 11)], SHORT_LABELS)


@pytest.fixture(scope="session")
def scenario():
    return load_scenario()


@pytest.fixture(scope="session")
def network(scenario):
    return scenario.structure()
