import numpy as np
import pytest

from sielab.mesh import GeometrySpec, build_background_mesh
from sielab.fem import WaveContext


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def two_region_spec():
    return GeometrySpec(2.0, (1.0,))


@pytest.fixture(scope="session")
def coarse_background(two_region_spec):
    return build_background_mesh(two_region_spec, 0.3)


def wave(s, R=2.0):
    return WaveContext(s, R)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)`` for the acceptance summary."""
    table = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number, passed, detail):
        table[number] = (bool(passed), detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(_ACCEPTANCE, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        passed, detail = table[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
