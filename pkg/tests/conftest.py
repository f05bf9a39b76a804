import sys

import numpy as np
import pytest

from planestereo.synth import parse_scene, render


@pytest.fixture(scope="session")
def flat_pair():
    return render(parse_scene("flat:20"))


@pytest.fixture(scope="session")
def slanted_pair():
    return render(parse_scene("slanted:0.05,0.02,10"))


@pytest.fixture(scope="session")
def shift7_pair():
    return render(parse_scene("flat:7", width=160, height=120, seed=3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    mod.print_results(terminalreporter.write_line)
