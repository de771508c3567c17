import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hypannulus import norms as nm
from hypannulus import transforms as tr
from hypannulus.core import radial_from_callable
from hypannulus.spherical import phi_table

from conftest import envelope, grid_for

RHO = 1.0


def _space(n):
    t = np.linspace(0.0, 1.0, n)
    return nm.WeightedHalfLine(t, np.full(n, 1.0 / n))


vectors = st.integers(5, 200).flatmap(
    lambda n: st.tuples(
        arrays(np.float64, n, elements=st.floats(-10, 10, allow_nan=False)),
        arrays(np.float64, n, elements=st.floats(1e-3, 5.0)),
    )
)


def _random_space(w):
    return nm.WeightedHalfLine(np.arange(w.size, dtype=float), w)


# --- measure spaces and the distribution function ----------------------------------


def test_weighted_half_line_validation():
    with pytest.raises(ValueError):
        nm.WeightedHalfLine(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        nm.WeightedHalfLine(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        nm.WeightedHalfLine(np.array([0.0, 1.0]), np.ones(3))
    assert _space(10).total_mass_diagnostic == pytest.approx(1.0)


def test_distribution_trivial_cases():
    sp = _space(50)
    assert nm.distribution_function(np.zeros(50), sp, 0.3) == 0
    ind = np.zeros(50)
    ind[[3, 7, 20]] = 1.0
    assert nm.distribution_function(ind, sp, 0.5) == pytest.approx(3 / 50)
    # modulus convention
    assert nm.distribution_function(-ind * 1j, sp, 0.5) == pytest.approx(3 / 50)
    with pytest.raises(ValueError):
        nm.distribution_function(ind, sp, -1.0)


def _exact_distribution(s):
    return (s**-2 - np.exp(2 * RHO)) / (2 * RHO)


def test_distribution_exponential_cell_bracket():
    # the node sum differs from the closed form by at most the cell straddling |f| = s
    sp = nm.exponential_half_line(RHO, n_nodes=4001)
    f = np.exp(-RHO * sp.t_nodes)
    s = np.exp(-RHO) * np.array([0.5, 0.3, 0.1, 0.03, 0.01])
    d = nm.distribution_function(f, sp, s)
    boundary = np.searchsorted(-f, -s)
    assert np.all(np.abs(d - _exact_distribution(s)) <= sp.weights[boundary])
    assert nm.distribution_function(f, sp, np.exp(-RHO) * 1.01) == 0


def test_distribution_exponential_first_order():
    s = np.exp(-RHO) * np.array([0.5, 0.3, 0.1, 0.03, 0.01])
    errs = []
    for n in (1001, 4001, 16001):
        sp = nm.exponential_half_line(RHO, n_nodes=n)
        d = nm.distribution_function(np.exp(-RHO * sp.t_nodes), sp, s)
        errs.append(np.max(np.abs(d / _exact_distribution(s) - 1)))
    assert errs[-1] < 2e-3
    assert errs[0] / errs[-1] > 4


# --- rearrangement and quasi-norms ------------------------------------------------------


@settings(max_examples=100)
@given(vectors)
def test_equimeasurability(data):
    v, w = data
    sp = _random_space(w)
    s, fs = nm.rearrangement(v, sp)
    direct = np.sum(w * v**2)
    ds = np.diff(np.concatenate([[0.0], s]))
    assert np.sum(ds * fs**2) == pytest.approx(direct, rel=1e-10, abs=1e-300)
    assert np.all(np.diff(fs) <= 0)


@settings(max_examples=100)
@given(vectors)
def test_nesting_chain(data):
    v, w = data
    v = np.abs(v) + 1e-3
    sp = _random_space(w)
    weak = nm.lorentz_quasinorm(v, sp, 2).value
    l2 = nm.lorentz_quasinorm(v, sp, 2, 2).value
    l21 = nm.lorentz_quasinorm(v, sp, 2, 1).value
    assert weak <= l2 * (1 + 1e-12)
    assert l2 <= l21 * (1 + 1e-12)
    assert l2 == pytest.approx(np.sqrt(np.sum(w * v**2)), rel=1e-10)


@given(vectors, st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_homogeneity_and_sweep_below_exact(data, c):
    v, w = data
    if not np.any(v):
        return
    sp = _random_space(w)
    r = nm.lorentz_quasinorm(v, sp, 2)
    assert nm.lorentz_quasinorm(c * v, sp, 2).value == pytest.approx(abs(c) * r.value, rel=1e-12)
    assert r.sweep_value <= r.value * (1 + 1e-12)
    s, fs = r.rearrangement
    assert r.value == fs[r.sup_location] * np.sqrt(s[r.sup_location])


def test_indicator_norm():
    sp = _space(40)
    ind = (np.arange(40) % 3 == 0).astype(float)
    measure = ind.sum() / 40
    assert nm.lorentz_quasinorm(ind, sp, 2).value == pytest.approx(np.sqrt(measure))
    # the sweep misses the jump at alpha = 1 by at most one geometric level
    step = nm.SWEEP_SPAN ** (1 / (nm.SWEEP_LEVELS - 1))
    sweep = nm.lorentz_quasinorm(ind, sp, 2).sweep_value
    assert step * np.sqrt(measure) * (1 - 1e-12) <= sweep <= np.sqrt(measure)


def test_lorentz_errors_and_zero():
    sp = _space(10)
    with pytest.raises(ValueError):
        nm.lorentz_quasinorm(np.ones(10), sp, 1.0)
    with pytest.raises(ValueError):
        nm.lorentz_quasinorm(np.ones(10), sp, 2, 0.5)
    with pytest.raises(ValueError):
        nm.lorentz_quasinorm(np.ones(3), sp, 2)
    z = nm.lorentz_quasinorm(np.zeros(10), sp, 2)
    assert z.value == 0 and z.sup_location is None and z.rearrangement[0].size == 0


def test_exponential_weak_norm():
    # sup of alpha d(alpha)^{1/2} is approached as alpha -> 0 with limit (2 rho)^{-1/2}
    target = (2 * RHO) ** -0.5
    prev = None
    for n in (4001, 16001):
        sp = nm.exponential_half_line(RHO, n_nodes=n)
        f = np.exp(-RHO * sp.t_nodes)
        r = nm.lorentz_quasinorm(f, sp, 2)
        err = r.value / target - 1
        assert 0 <= err < 1e-2
        assert prev is None or err < prev
        prev = err
    assert prev < 2e-3
    refined = nm.sweep_quasinorm(f, sp, 2, levels=2 * nm.SWEEP_LEVELS)
    assert abs(refined / r.sweep_value - 1) < 5e-3


# --- membership diagnostics -----------------------------------------------------------------


@pytest.mark.parametrize(
    "label,verdict",
    [("exp", "bounded"), ("texp", "diverging"), ("phi0", "diverging"), ("phi1", "bounded")],
)
def test_membership_verdicts(h3, label, verdict):
    g = grid_for(h3)
    t = g.t_nodes
    values = {
        "exp": np.exp(-t),
        "texp": t * np.exp(-t),
        "phi0": envelope(h3, t),
        "phi1": phi_table(h3, [1.0], t)[0].real,
    }[label]
    res = nm.weak_l2_membership_diagnostic(radial_from_callable(g, lambda x: values))
    assert res.verdict == verdict
    assert res.norms.shape == (4,)


def test_membership_errors(h3):
    f = radial_from_callable(grid_for(h3), lambda t: np.exp(-t))
    with pytest.raises(ValueError):
        nm.weak_l2_membership_diagnostic(f, (10.0, 20.0))
    with pytest.raises(ValueError):
        nm.weak_l2_membership_diagnostic(f, (10.0, 20.0, 30.0))


def test_plain_l2_diverges_for_eigenfunction(h3):
    g = grid_for(h3)
    f = radial_from_callable(g, lambda t: phi_table(h3, [1.0], t)[0].real)
    l2 = nm.weak_l2_membership_diagnostic(f, norm=lambda v, sp: nm.lorentz_quasinorm(v, sp, 2, 2).value)
    assert l2.verdict == "diverging"


# --- weighted, M_p and K functionals ----------------------------------------------------


def test_weighted_norm(h3):
    g = grid_for(h3)
    phi0 = radial_from_callable(g, lambda t: envelope(h3, t))
    assert nm.weighted_M_norm(phi0, 0) == pytest.approx(
        nm.lorentz_quasinorm(phi0.values, nm.radial_space(g), 2).value)
    weighted = nm.weak_l2_membership_diagnostic(phi0, norm=lambda v, sp: nm.lorentz_quasinorm(
        v * (1 + sp.t_nodes) ** -1, sp, 2).value)
    assert weighted.verdict == "bounded"
    assert np.isfinite(nm.weighted_M_norm(phi0, 1, t_cut=20.0))
    with pytest.raises(ValueError):
        nm.weighted_M_norm(phi0, -1)
    with pytest.raises(ValueError):
        nm.weighted_M_norm(phi0, 1.5)


def test_mp_functional(h3):
    g = grid_for(h3)
    r = np.linspace(5.0, 25.0, 21)
    bump = radial_from_callable(g, lambda t: np.exp(-(t**2)))
    val, diag = nm.mp_functional(bump, 2, r, return_diagnostics=True)
    # constant numerator: curve decays like 1/r, surrogate equals the value at the first top-half radius
    assert np.allclose(diag["curve"] * r, diag["curve"][0] * r[0], rtol=1e-12)
    assert val == pytest.approx(np.sqrt(diag["curve"][10]))
    phi1 = radial_from_callable(g, lambda t: phi_table(h3, [1.0], t)[0].real)
    v1, d1 = nm.mp_functional(phi1, 2, r, return_diagnostics=True)
    assert 0 < v1 < np.inf and d1["settled"]
    assert nm.mp_functional(-3 * phi1, 2, r) == pytest.approx(3 * v1, rel=1e-12)
    with pytest.raises(ValueError):
        nm.mp_functional(phi1, 1.0, r)


def test_kpq_radial_and_homogeneity(h2):
    g = grid_for(h2)
    theta = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    prof = np.exp(-g.t_nodes)
    pf = tr.PolarFunction(g, theta, np.repeat(prof[:, None], 16, axis=1))
    weak = nm.lorentz_quasinorm(prof, nm.radial_space(g), 2).value
    for q in (1.0, 2.0, 4.0):
        assert nm.kpq_functional(pf, q) == pytest.approx(weak, rel=1e-12)
    pf2 = tr.PolarFunction(g, theta, 2.5 * pf.values)
    assert nm.kpq_functional(pf2, 2.0) == pytest.approx(2.5 * weak, rel=1e-12)
    with pytest.raises(ValueError):
        nm.kq_profile(pf, 0.5)


def test_kpq_poisson_stable(h2):
    g = grid_for(h2)
    pf = tr.poisson_transform_2d(h2, 1.0, tr.BoundaryFunction.from_callable(np.cos, 64), g)
    vals = np.array([nm.kpq_functional(pf, 2.0, t_cut=T) for T in (10.0, 15.0, 20.0, 25.0)])
    assert np.all(np.isfinite(vals))
    assert abs(vals[-1] / vals[-2] - 1) <= 0.02
