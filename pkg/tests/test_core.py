import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypannulus.core import (
    RadialFunction,
    SpaceParams,
    SpectralFunction,
    density,
    gregory_weights,
    integrate_radial,
    make_radial_grid,
    make_space,
    make_spectral_grid,
    named_space,
    radial_from_callable,
)
from hypannulus.errors import GridError, TailDominatedError

from conftest import grid_for


def test_named_spaces():
    assert (named_space("h2").rho, named_space("h2").dim) == (0.5, 2)
    assert (named_space("h3").rho, named_space("h3").dim) == (1.0, 3)
    assert (named_space("h4c").rho, named_space("h4c").dim) == (2.0, 4)
    with pytest.raises(ValueError):
        named_space("h9")


@given(st.integers(1, 8), st.integers(0, 7))
def test_space_parameters(mg, m2):
    p = make_space(mg, m2)
    assert p.rho == (mg + 2 * m2) / 2
    assert p.dim == mg + m2 + 1
    assert p.eigenvalue(0.0) == p.rho**2


def test_invalid_spaces():
    for args in [(0, 0), (-1, 1), (1, -1), (1.5, 0)]:
        with pytest.raises(ValueError):
            make_space(*args)
    with pytest.raises(ValueError):
        SpaceParams(2, 0, rho=3.0)


def test_density_small_t(space):
    t = np.array([1e-4])
    d = density(space, t)
    assert d[0] == pytest.approx(t[0] ** space.m_gamma * (2 * t[0]) ** space.m_2gamma, rel=1e-6)


def test_gregory_weights_exact_for_polynomials():
    n = 40
    order = 8
    from hypannulus.core import _trapezoid_with_ends

    w = _trapezoid_with_ends(n, order)
    x = np.arange(n + 1.0)
    for k in range(order):
        assert np.sum(w * x**k) == pytest.approx(n ** (k + 1) / (k + 1), rel=1e-10)
    assert gregory_weights(order).shape == (order,)


def test_grid_errors(h3):
    with pytest.raises(GridError):
        make_radial_grid(h3, t_max=1.0)
    with pytest.raises(GridError):
        make_radial_grid(h3, n_nodes=32)
    with pytest.raises(GridError):
        make_radial_grid(h3, n_nodes=256, lambda_max=20.0)
    with pytest.raises(GridError):
        make_radial_grid(h3, grading="log")
    with pytest.raises(GridError):
        make_spectral_grid(h3, n_nodes=8)


@pytest.mark.parametrize("grading", ["graded", "uniform"])
def test_grid_integrates_volume(h3, grading):
    # integral of sinh^2(t) e^{-t^2} over (0, inf) with the radial measure
    g = grid_for(h3, grading=grading)
    f = radial_from_callable(g, lambda t: np.exp(-(t**2)))
    exact = 0.25 * np.sqrt(np.pi) * (np.e - 1)  # (sqrt(pi)/4)(e^{1} - 1)
    assert integrate_radial(f).real == pytest.approx(exact, rel=1e-12)
    assert g.t_nodes[-1] == 25.0
    assert np.all(np.diff(g.t_nodes) > 0)


def test_tail_dominated(h3):
    # coarse grid: the last node of a growing integrand carries about h * rate / 2 of the sum
    g = grid_for(h3, n_nodes=1024, lambda_max=5.0)
    f = radial_from_callable(g, lambda t: np.exp(-0.5 * t))
    with pytest.raises(TailDominatedError):
        integrate_radial(f)


def test_radial_function_arithmetic(h3):
    g = grid_for(h3)
    f = radial_from_callable(g, lambda t: np.exp(-(t**2)))
    h = 2 * f - f
    assert np.allclose(h.values, f.values) and h.value_at_origin == 1
    assert (-f).sup() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        RadialFunction(g, np.zeros(3))
    other = make_radial_grid(h3, n_nodes=1024, lambda_max=5)
    with pytest.raises(ValueError):
        f + radial_from_callable(other, np.cos)


def test_spectral_function_shape(h3, grids):
    _, sg = grids(h3)
    with pytest.raises(ValueError):
        SpectralFunction(sg, np.zeros(3))
    s = SpectralFunction(sg, np.ones(len(sg)), ((1, 2),), log_scale=np.log(3.0))
    assert s.atoms == ((1 + 0j, 2 + 0j),)
    assert np.allclose(s.scaled_values(), 3.0)
