import numpy as np
import pytest

from bandcub.lattice import build_lattice
from bandcub.manifold import CIRCLE, SPHERE2

# filled by test_acceptance.py: criterion number -> (passed, summary)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, summary = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {num:2d}. {summary}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def circle8():
    return build_lattice(CIRCLE, np.pi / 2, seed=0)


@pytest.fixture(scope="session")
def sphere_lattice():
    return build_lattice(SPHERE2, 0.6, seed=1)
