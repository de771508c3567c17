import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypannulus import transforms as tr
from hypannulus.core import RadialFunction, SpectralFunction, named_space, radial_from_callable
from hypannulus.errors import GridError, TailDominatedError, UnsupportedError
from hypannulus.spherical import phi_table

from conftest import grid_for


def test_parseval_constant_matches_closed_form(space, grids):
    g, sg = grids(space)
    c, spread = tr.parseval_constant(space, g, sg, return_spread=True)
    assert spread < 1e-10
    assert c == pytest.approx(tr.closed_form_constant(space), rel=1e-9)


def test_frozen_constants():
    # [DERIVED] 2^{m_gamma + m_2gamma} / (2 pi) for the density normalisation sinh^m sinh(2t)^m2
    assert tr.closed_form_constant(named_space("h2")) == pytest.approx(1 / np.pi)
    assert tr.closed_form_constant(named_space("h3")) == pytest.approx(2 / np.pi)
    assert tr.closed_form_constant(named_space("h4c")) == pytest.approx(4 / np.pi)


@given(st.floats(0.3, 3.0), st.floats(0.0, 2.0), st.sampled_from(["h2", "h3", "h4c"]))
def test_round_trip_property(a, shift, name):
    p = named_space(name)
    g = grid_for(p)
    sg = tr.spectral_grid_for(p)
    f = radial_from_callable(g, lambda t: (1 + shift * t**2) * np.exp(-a * t**2))
    back = tr.inverse_spherical_transform(tr.spherical_transform(f, sg), g)
    assert np.max(np.abs(back.values - f.values)) < 1e-8 * f.sup()
    assert back.value_at_origin == pytest.approx(1.0, abs=1e-8)


def test_transform_of_gaussian_h3(h3, grids):
    g, sg = grids(h3)
    f = radial_from_callable(g, lambda t: np.exp(-(t**2)))
    lam = sg.lambda_nodes[1::40]
    fhat = tr.spherical_transform(f, sg).values[1::40]
    # integral_0^inf e^{-t^2} sin(l t) sinh(t) / l dt = (sqrt(pi)/2) e^{(1-l^2)/4} sin(l/2) / l
    exact = 0.5 * np.sqrt(np.pi) * np.exp((1 - lam**2) / 4) * np.sin(lam / 2) / lam
    assert np.max(np.abs(fhat - exact)) < 1e-12


def test_forward_tail_detection(h3, grids):
    g, sg = grids(h3)
    with pytest.raises(TailDominatedError):
        tr.spherical_transform(radial_from_callable(g, lambda t: np.exp(-0.9 * t)), sg)


def test_inverse_tail_detection(h3, grids):
    g, sg = grids(h3)
    high = SpectralFunction(sg, (sg.lambda_nodes > 18).astype(float))
    with pytest.raises(TailDominatedError):
        tr.inverse_spherical_transform(high, g)


def test_atoms_invert_to_spherical_functions(h4c, grids):
    g, sg = grids(h4c)
    lam = 1.3 + 0.2j
    f = tr.inverse_spherical_transform(SpectralFunction(sg, np.zeros(len(sg)), ((lam, 2.0),), np.log(0.5)), g)
    assert np.allclose(f.values, phi_table(h4c, [lam], g.t_nodes)[0], atol=1e-14)
    assert f.value_at_origin == pytest.approx(1.0)


# --- heat kernel and convolution ----------------------------------------------------


def test_heat_kernel_h3_closed_form(h3, grids):
    g, sg = grids(h3)
    s = 0.5
    h = tr.heat_kernel(h3, s, g, sg)
    t = g.t_nodes
    shape = (t / np.sinh(t)) * np.exp(-s - t**2 / (4 * s))
    c = h.values.real[0] / shape[0]
    assert np.max(np.abs(h.values.real - c * shape)) < 1e-12 * np.max(np.abs(h.values))
    # normalisation differs from (4 pi s)^{-3/2} only by the density constant 4 pi
    assert c * (4 * np.pi * s) ** 1.5 == pytest.approx(4 * np.pi, rel=1e-9)


def test_heat_kernel_positive_above_noise_floor(space, grids):
    g, sg = grids(space)
    h = tr.heat_kernel(space, 0.5, g, sg)
    floor = h.diagnostics["noise_floor"]
    assert np.all(h.values.real > -floor)
    assert np.all(h.values.real[np.abs(h.values) > floor] > 0)


def test_heat_kernel_rejects_small_s(h3, grids):
    g, sg = grids(h3)
    with pytest.raises(GridError):
        tr.heat_kernel(h3, 0.01, g, sg)
    with pytest.raises(ValueError):
        tr.heat_kernel(h3, 0.0, g, sg)


@pytest.mark.parametrize("s,u", [(0.3, 0.5), (0.2, 1.0)])
def test_semigroup(space, grids, s, u):
    g, sg = grids(space)
    conv = tr.convolve_radial(tr.heat_kernel(space, s, g, sg), tr.heat_kernel(space, u, g, sg), sg)
    target = tr.heat_kernel(space, s + u, g, sg)
    assert np.max(np.abs(conv.values - target.values)) < 1e-9 * target.sup()


def test_convolution_commutes(h2, grids):
    g, sg = grids(h2)
    f = radial_from_callable(g, lambda t: np.exp(-(t**2)))
    k = radial_from_callable(g, lambda t: t**2 * np.exp(-2 * t**2))
    a, b = tr.convolve_radial(f, k, sg), tr.convolve_radial(k, f, sg)
    assert np.allclose(a.values, b.values, atol=1e-15)


# --- Abel transform -------------------------------------------------------------------


@pytest.mark.parametrize("name", ["h2", "h3"])
def test_slice_projection(name):
    p = named_space(name)
    g = grid_for(p)
    s = 0.5
    A = tr.abel_transform(tr.heat_kernel(p, s, g))
    lam = np.linspace(0, 10, 101)
    assert np.max(np.abs(tr.euclidean_ft(A, lam) - tr.heat_multiplier(p, s, lam))) < 1e-9
    gauss = np.exp(-s * p.rho**2) * (4 * np.pi * s) ** -0.5 * np.exp(-A.t_nodes**2 / (4 * s))
    assert np.max(np.abs(A.values - gauss)) < 1e-9
    assert np.allclose(A.values, A.values[::-1])


def test_abel_constants():
    # H^3 needs no rescaling; on H^2 the constant is sqrt(2)/pi
    assert tr.abel_constant(grid_for(named_space("h3"))) == pytest.approx(1.0, rel=1e-9)
    assert tr.abel_constant(grid_for(named_space("h2"))) == pytest.approx(np.sqrt(2) / np.pi, rel=1e-9)


def test_abel_errors(h3, h4c):
    g = grid_for(h4c)
    with pytest.raises(UnsupportedError):
        tr.abel_transform(radial_from_callable(g, lambda t: np.exp(-(t**2))))
    g3 = grid_for(h3)
    with pytest.raises(TailDominatedError):
        tr.abel_transform(radial_from_callable(g3, lambda t: np.exp(-0.5 * t)))


# --- Poisson transform on H^2 ---------------------------------------------------------


def test_poisson_of_constant_is_phi(h2):
    g = grid_for(h2)
    one = tr.BoundaryFunction.from_callable(lambda th: np.ones_like(th), 64)
    pf = tr.poisson_transform_2d(h2, 1.0, one, g)
    assert np.max(np.abs(pf.values[:, 0] - phi_table(h2, [1.0], g.t_nodes)[0])) < 1e-11
    assert pf.diagnostics["convention"] == ("P", +1)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_poisson_eigen_residual(h2, lam):
    g = grid_for(h2)
    F = tr.BoundaryFunction.from_callable(np.cos, 128)
    pf = tr.poisson_transform_2d(h2, lam, F, g)
    assert tr.polar_eigen_residual(pf, lam) < 1e-4
    # cos theta stays a single angular mode: u(t, theta) = a(t) cos theta
    a = pf.values[:, 0]
    assert np.max(np.abs(pf.values - a[:, None] * np.cos(pf.theta_nodes)[None, :])) < 1e-12 * np.max(np.abs(a))


def test_poisson_errors(h2, h3):
    F = tr.BoundaryFunction.from_callable(np.cos, 16)
    with pytest.raises(UnsupportedError):
        tr.poisson_transform_2d(h3, 1.0, F, grid_for(h3))
    with pytest.raises(ValueError):
        tr.poisson_transform_2d(h2, 0.0, F, grid_for(h2))
    with pytest.raises(GridError):
        tr.BoundaryFunction(np.array([0.0, 1.0, 2.0]), np.ones(3))
