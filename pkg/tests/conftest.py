import math
import os

import pytest
from hypothesis import settings

from magnonlab.params import CavityParams, MagnonModeParams
from magnonlab.spectra import SystemConfig

settings.register_profile("default", max_examples=200, deadline=None)
settings.register_profile("ci", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

C_KITTEL = (2 * math.pi) ** 3 * 4.7e24
C_MS1 = (2 * math.pi) ** 3 * 1.35e24
C_MS2 = (2 * math.pi) ** 3 * 6e24


@pytest.fixture(scope="session")
def cavity():
    # kappa = 2.87 MHz split as kappa/4 per port
    return CavityParams(10.1003e9, 0.7175e6, 0.7175e6, 1.435e6)


@pytest.fixture(scope="session")
def kittel():
    return MagnonModeParams(9.5503e9, 24.3e6, 42e6, kerr_K=1e-8, drive_c=C_KITTEL)


@pytest.fixture(scope="session")
def system(cavity, kittel):
    return SystemConfig(cavity, (kittel,))


_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, ok, detail)`` then assert on ``ok`` yourself."""
    lines = request.config.stash.setdefault(_CRITERIA, {})

    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.setdefault(n, []).append((ok, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        for _, line in lines[n]:
            terminalreporter.write_line(line)
