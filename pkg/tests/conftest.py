import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from torsionlab.geometry import StarDomain, mesh_star_domain

settings.register_profile("torsionlab", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("torsionlab")


@pytest.fixture(scope="session")
def disk():
    return StarDomain.disk()


@pytest.fixture(scope="session")
def disk_mesh(disk):
    return mesh_star_domain(disk, 0.03)


@pytest.fixture(scope="session")
def ellipse01():
    return StarDomain.ellipse_eps(0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, res in results.items():
        terminalreporter.write_line(
            f"{name}: {'PASS' if res.passed else 'FAIL'}  {res.summary}  ({res.seconds:.1f}s)")
