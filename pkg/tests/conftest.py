import pytest

from rld_chaos.analysis import AnalysisSettings, BifurcationDiagram, bifurcation_sweep
from rld_chaos.integrator import IntegrationConfig
from rld_chaos.model import CircuitParams


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-length simulations")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def default_diagram() -> BifurcationDiagram:
    """The full default amplitude sweep, shared by the slow tests."""
    settings = AnalysisSettings()
    return bifurcation_sweep(
        CircuitParams(),
        settings.e_min,
        settings.e_max,
        settings.steps,
        IntegrationConfig(),
        settings.transient_cycles,
        settings.record_cycles,
        jobs=4,
    )
