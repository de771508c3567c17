import numpy as np
import pytest
from hypothesis import settings

from hypannulus.core import make_radial_grid, named_space
from hypannulus.transforms import spectral_grid_for

settings.register_profile("repo", max_examples=25, deadline=None)
settings.load_profile("repo")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session", params=["h2", "h3", "h4c"])
def space(request):
    return named_space(request.param)


@pytest.fixture(scope="session")
def h2():
    return named_space("h2")


@pytest.fixture(scope="session")
def h3():
    return named_space("h3")


@pytest.fixture(scope="session")
def h4c():
    return named_space("h4c")


_GRIDS = {}


def grid_for(params, **kw):
    key = (params, tuple(sorted(kw.items())))
    if key not in _GRIDS:
        _GRIDS[key] = make_radial_grid(params, **kw)
    return _GRIDS[key]


@pytest.fixture(scope="session")
def grids():
    """(params) -> (default radial grid, default spectral grid)."""
    return lambda p: (grid_for(p), spectral_grid_for(p))


def envelope(params, t):
    from hypannulus.spherical import phi_table

    return phi_table(params, [0.0], np.asarray(t, dtype=float))[0].real


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
