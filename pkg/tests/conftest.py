import numpy as np
import pytest

from prequant.models import make_model

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def models():
    cache = {}

    def get(model_id):
        if model_id not in cache:
            cache[model_id] = make_model(model_id)
        return cache[model_id]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
