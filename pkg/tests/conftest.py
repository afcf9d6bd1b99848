import numpy as np
import pytest

from ifslab.families import load_fixture

# acceptance lines collected by tests/test_acceptance.py, printed in the summary
ACCEPTANCE = {}


def record(key, ok, detail=""):
    ACCEPTANCE[key] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split("/")[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rot45_pair():
    return load_fixture("rot45_pair")


@pytest.fixture
def flip_interval():
    return load_fixture("flip_interval")


@pytest.fixture
def diagonal_dust():
    return load_fixture("diagonal_dust")


@pytest.fixture
def quarter_line():
    return load_fixture("quarter_line")


@pytest.fixture
def spiral_approach():
    return load_fixture("spiral_approach")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
