import numpy as np
import pytest

from hsitd.synth import SyntheticSpec, generate_scene

ACCEPTANCE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_scene():
    return generate_scene(SyntheticSpec())


@pytest.fixture(scope="session")
def small_scene():
    return generate_scene(
        SyntheticSpec(height=20, width=20, bands=16, background_rank=3, n_targets=8, seed=3)
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
