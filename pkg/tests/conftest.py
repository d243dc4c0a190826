import sys

import numpy as np
import pytest

from prodspace.geometry import SpaceFormSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


CURVED_SPECS = [
    SpaceFormSpec.spherical(d, c) for d in (2, 3, 4, 5) for c in (1.0, 0.25)
] + [SpaceFormSpec.hyperbolic(d, c) for d in (2, 3, 4, 5) for c in (-1.0, -0.25)]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
