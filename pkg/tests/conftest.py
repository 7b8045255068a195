import numpy as np
import pytest

from h2fatigue.mesh import CTGeometry, generate_ct_half_mesh, rectangle_mesh
from h2fatigue.params import MaterialParams

ELL = MaterialParams().ell


def coarse_ct_geometry(a0=20.32, band_length=3.0, **kw):
    """Small CT mesh used by the coupled tests (~1400 elements)."""
    kw.setdefault("band_behind", 0.3)
    kw.setdefault("band_half_height", ELL)
    return CTGeometry(a0=a0, band_length=band_length, **kw)


@pytest.fixture(scope="session")
def coarse_ct():
    return generate_ct_half_mesh(coarse_ct_geometry().resolved(ELL), ELL)


@pytest.fixture
def strip():
    return rectangle_mesh(1.0, 0.1, 10, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
