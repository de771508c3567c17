import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import loggamma

from hypannulus import spherical as sph
from hypannulus.core import make_space, named_space
from hypannulus.errors import DegenerateDenominatorError, UnsupportedError

from conftest import envelope, grid_for

T = np.array([0.01, 0.2, 0.7, 1.0, 2.0, 5.0, 10.0, 20.0])


def c_closed(params, lam):
    """c(lambda) from its gamma-function product, normalised by c(-i rho) = 1."""
    mg, m2 = params.m_gamma, params.m_2gamma

    def raw(l):
        return np.exp(-1j * l * np.log(2) + loggamma(1j * l) - loggamma(0.5 * (0.5 * mg + 1 + 1j * l))
                      - loggamma(0.5 * (0.5 * mg + m2 + 1j * l)))

    return raw(np.asarray(lam, dtype=complex)) / raw(-1j * params.rho)


def h3_closed(lam, t):
    return np.sin(lam * t) / (lam * np.sinh(t))


# --- coefficients -----------------------------------------------------------


def test_gamma_h3_all_ones(h3):
    g = sph.gamma_coeffs(h3, 1.7, 30)
    assert np.allclose(g.coeffs, 1.0, atol=1e-13)


def test_gamma_first_coefficient(space):
    lam = 0.8 + 0.1j
    g = sph.gamma_coeffs(space, lam, 3).coeffs
    rho = space.rho
    g1 = (rho * (rho - 1j * lam) - space.m_2gamma * (rho - 1j * lam)) / (1 - 1j * lam)
    assert g[0] == 1
    assert g[1] == pytest.approx(g1, rel=1e-14)


def test_gamma_frozen_h2():
    # frozen from the recursion at lambda = 1 on H^2; Gamma_1 = rho (rho - i) / (1 - i)
    g = sph.gamma_coeffs(named_space("h2"), 1.0, 3).coeffs
    assert np.allclose(g, [1, 0.375 - 0.125j, 0.215625 - 0.103125j, 0.1484375 - 0.08203125j], rtol=1e-14)


@pytest.mark.parametrize("lam", [1.0, 3.0, 0.5])
def test_gamma_polynomial_growth(space, lam):
    g = sph.gamma_coeffs(space, lam, 200).coeffs
    k = np.arange(201)
    assert np.max(np.abs(g) / (1 + k) ** 3) <= 1.0 + 1e-12


def test_gamma_degenerate(h3):
    with pytest.raises(DegenerateDenominatorError):
        sph.gamma_coeffs(h3, -2j, 10)
    with pytest.raises(ValueError):
        sph.gamma_coeffs(h3, 1.0, 0)


# --- evaluation paths ----------------------------------------------------------


@pytest.mark.parametrize("lam", [0.025, 0.5, 1.0, 2.0, 5.0, 20.0])
def test_h3_closed_form(h3, lam):
    env = envelope(h3, T)
    exact = h3_closed(lam, T)
    assert np.max(np.abs(sph.phi_table(h3, [lam], T)[0] - exact) / env) < 1e-12
    assert np.max(np.abs(sph.ode_table(h3, [lam], T)[0] - exact) / env) < 1e-10


def test_phi_at_origin_and_zero(space):
    t = np.array([1e-6, 1e-4])
    assert np.allclose(sph.phi_table(space, [0.0, 1.0, 3.0 + 0.2j], t), 1.0, atol=1e-7)
    # phi_0 is positive and decays like t e^{-rho t}
    p0 = envelope(space, np.array([10.0, 20.0]))
    assert np.all(p0 > 0)
    ratio = p0[1] / p0[0] / (2 * np.exp(-10 * space.rho))
    assert 0.8 < ratio < 1.2


@pytest.mark.parametrize("lam", [0.3, 2.0, 1 + 0.3j, 2 - 0.4j])
def test_series_matches_ode(space, lam):
    t = np.array([1.0, 2.0, 5.0, 10.0, 20.0])
    series = sph.phi_series(space, sph.hc_expansion(space, lam), t)
    ode = sph.ode_table(space, [lam], t)[0]
    scale = envelope(space, t) * np.exp(abs(np.imag(lam)) * t)
    assert np.max(np.abs(series - ode) / scale) < 1e-9


def test_fit_and_match_agree(h4c):
    a = sph.hc_expansion(h4c, 1.3, method="fit")
    b = sph.hc_expansion(h4c, 1.3, method="match")
    assert a.c_plus == pytest.approx(b.c_plus, rel=1e-9)
    with pytest.raises(ValueError):
        sph.hc_expansion(h4c, 1.3, method="magic")
    with pytest.raises(ValueError):
        sph.phi_series(h4c, a, 0.5)


@given(st.floats(0.05, 20.0), st.sampled_from(["h2", "h3", "h4c"]))
def test_even_real_and_dominated(lam, name):
    p = named_space(name)
    plus = sph.phi_table(p, [lam], T)[0]
    minus = sph.phi_table(p, [-lam], T)[0]
    assert np.max(np.abs(plus - minus) / envelope(p, T)) < 1e-10
    assert np.max(np.abs(plus.imag) / envelope(p, T)) < 1e-10
    assert np.all(np.abs(plus) <= envelope(p, T) * (1 + 1e-9))


@given(st.floats(0.1, 8.0), st.floats(-0.3, 0.3), st.sampled_from([(1, 0), (2, 1), (3, 0), (1, 1)]))
def test_table_matches_ode_property(re, im, mult):
    p = make_space(*mult)
    lam = complex(re, im * p.rho)
    tab = sph.phi_table(p, [lam], T)[0]
    ode = sph.ode_table(p, [lam], T)[0]
    scale = envelope(p, T) * np.exp(abs(lam.imag) * T)
    assert np.max(np.abs(tab - ode) / scale) < 1e-9


# --- c-function and Plancherel density ---------------------------------------------


@pytest.mark.parametrize("lam", [0.3, 1.0, 2.5, 7.0])
def test_c_function_closed_form(space, lam):
    cp, cm = sph.extract_c_function(space, lam)
    exact = c_closed(space, lam)
    assert cp == pytest.approx(exact, rel=1e-9)
    assert cm == pytest.approx(np.conj(exact), rel=1e-9)


@given(st.floats(0.01, 20.0), st.sampled_from(["h2", "h3", "h4c"]))
def test_plancherel_property(lam, name):
    p = named_space(name)
    got = sph.plancherel_density(p, lam)[0]
    assert got == pytest.approx(abs(c_closed(p, lam)) ** -2, rel=1e-9)


def test_plancherel_known_forms():
    lam = np.array([0.3, 1.0, 4.0])
    assert np.allclose(sph.plancherel_density(named_space("h3"), lam), lam**2, rtol=1e-10)
    h2 = sph.plancherel_density(named_space("h2"), lam)
    assert np.allclose(h2, np.pi * lam * np.tanh(np.pi * lam), rtol=1e-10)
    # even continuation to lambda = 0: density vanishes quadratically
    assert abs(sph.plancherel_density(named_space("h3"), 0.0)[0]) < 1e-10
    with pytest.raises(UnsupportedError):
        sph.extract_c_function(named_space("h3"), 0.0)


# --- lambda-derivatives --------------------------------------------------------------


def test_lambda_derivative_h3(h3):
    g = grid_for(h3)
    t, lam = g.t_nodes, 1.3
    d1 = sph.phi_lambda_derivative(h3, lam, 1, g)
    exact1 = (t * np.cos(lam * t) / lam - np.sin(lam * t) / lam**2) / np.sinh(t)
    assert np.max(np.abs(d1.values - exact1)) < 1e-10
    d2 = sph.phi_lambda_derivative(h3, lam, 2, g)
    exact2 = (-(t**2) * np.sin(lam * t) / lam - 2 * t * np.cos(lam * t) / lam**2
              + 2 * np.sin(lam * t) / lam**3) / np.sinh(t)
    assert np.max(np.abs(d2.values - exact2)) < 1e-6
    # growth bound |d^n phi| <= C (1+t)^n phi_0 with a moderate C
    assert d1.diagnostics["growth_constant"] < 2 and d2.diagnostics["growth_constant"] < 2
    with pytest.raises(ValueError):
        sph.phi_lambda_derivative(h3, 0.0, 1, g)
    with pytest.raises(ValueError):
        sph.phi_lambda_derivative(h3, 1.0, 3, g)
