import numpy as np
import pytest
from hypothesis import settings

from rabiring.model import Functional, MeanFieldState

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

J = 0.05


def random_state(rng, n, functional=Functional.QRR_CO, radius=0.8):
    """Uniform per-site draw from the disk of the given radius."""
    r = radius * np.sqrt(rng.uniform(size=n))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return MeanFieldState(r * np.cos(phi), r * np.sin(phi))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results collected by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
