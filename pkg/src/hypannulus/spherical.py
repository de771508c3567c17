"""Elementary spherical functions, their lambda-derivatives and the c-function.

Two independent evaluation paths are provided:

* an ODE path (``phi_ode``) integrating the radial eigen-equation from a
  Taylor start near the origin, and
* a series path built on the Harish-Chandra expansion at infinity
  (``phi_series``), with the c-function fitted from the ODE at large radius.

``phi_table`` is the fast evaluator used by the transforms.  Near the origin it
sums a hypergeometric representation, away from it the Harish-Chandra series,
with the two coefficients c(+-lambda) fixed by matching value and slope at the
seam.  The series sums are delegated to :mod:`hypannulus.kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from .core import RadialFunction, RadialGrid, SpaceParams
from .errors import (
    ConvergenceError,
    DegenerateDenominatorError,
    IllConditionedError,
    SeriesOverflowError,
    UnsupportedError,
)

__all__ = [
    "GammaCoeffs",
    "HCExpansion",
    "gamma_coeffs",
    "hc_expansion",
    "phi_ode",
    "phi_series",
    "extract_c_function",
    "plancherel_density",
    "phi_table",
    "phi_lambda_derivative",
    "ode_table",
    "default_switch",
]

T_START = 1e-3
ODE_RTOL = 1e-12
ODE_ATOL = 1e-14
GROWTH_EXPONENT = 3.0
SERIES_TOL = 1e-12
K_MAX = 200
HYP_TERMS = 400
FIT_T1 = 15.0
FIT_T2 = 20.0
FIT_MIN_SIN = 0.3
ODE_BATCH = 128
CONTINUATION_STEP = 0.0025


def _as_lambda_array(lams):
    return np.atleast_1d(np.asarray(lams, dtype=complex))


# ---------------------------------------------------------------------------
# Harish-Chandra coefficients


@dataclass(frozen=True)
class GammaCoeffs:
    """Coefficients Gamma_0..Gamma_K of the expansion at infinity."""

    lam: complex
    coeffs: np.ndarray
    truncation_K: int


def _gamma_table(params: SpaceParams, lams, K: int) -> np.ndarray:
    """Rows Gamma_0..Gamma_K for each lambda, vectorised over lambda.

    The alternating sum in the recursion is carried as a running sum, so the
    cost is O(K) per lambda.
    """
    lams = _as_lambda_array(lams)
    rho, m2 = params.rho, params.m_2gamma
    il = 1j * lams
    out = np.empty((lams.size, K + 1), dtype=complex)
    out[:, 0] = 1.0
    run = np.zeros(lams.size, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(K):
            g = out[:, k]
            run = run + (-1) ** k * (rho + 2 * k - il) * g
            rhs = (rho + k) * (rho + k - il) * g
            if m2:
                rhs = rhs + m2 * (-1) ** (k + 1) * run
            out[:, k + 1] = rhs / ((k + 1) * (k + 1 - il))
    return out


def _degenerate(lams, K: int) -> np.ndarray:
    """True where some denominator (k+1)(k+1-i lambda), k < K, vanishes."""
    lams = _as_lambda_array(lams)
    k = np.arange(1, K + 1)
    return np.any(np.abs(k[None, :] - 1j * lams[:, None]) < 1e-12, axis=1)


def gamma_coeffs(params: SpaceParams, lam: complex, K: int) -> GammaCoeffs:
    """Run the coefficient recursion to order K.

    Raises DegenerateDenominatorError when lambda = -i(k+1) for some k < K,
    SeriesOverflowError when a coefficient exceeds 1e300, and ConvergenceError
    if real-lambda coefficients outgrow the polynomial guard.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    lam = complex(lam)
    if _degenerate(lam, K)[0]:
        raise DegenerateDenominatorError(f"lambda={lam} makes a recursion denominator vanish")
    g = _gamma_table(params, lam, K)[0]
    if not np.all(np.isfinite(g)) or np.max(np.abs(g)) > 1e300:
        raise SeriesOverflowError(f"coefficients overflow before K={K}; reduce K or use the ODE path")
    if abs(lam.imag) < 1e-14 and lam.real != 0:
        k = np.arange(K + 1)
        bound = (1 + k) ** GROWTH_EXPONENT * max(1.0, 1 / abs(lam))
        if np.any(np.abs(g) > bound):
            kbad = int(np.argmax(np.abs(g) > bound))
            raise ConvergenceError(f"|Gamma_{kbad}| = {abs(g[kbad]):.3g} exceeds the polynomial growth guard")
    return GammaCoeffs(lam, g, K)


# ---------------------------------------------------------------------------
# ODE path


def _taylor(params: SpaceParams, E, t):
    """Degree-4 Taylor polynomial of the regular solution and its derivative."""
    d = params.dim
    a1 = (params.m_gamma + 4 * params.m_2gamma) / 3
    b2 = -E / (2 * d)
    b4 = -b2 * (E + 2 * a1) / (4 * (d + 2))
    t2 = t * t
    return 1 + b2 * t2 + b4 * t2 * t2, 2 * b2 * t + 4 * b4 * t2 * t


def _ode_chunk(params: SpaceParams, lams, t_eval):
    """Integrate the scaled equation for w = e^{rho t} u, all lambdas at once."""
    rho = params.rho
    E = lams**2 + rho**2
    L = lams.size
    u0, du0 = _taylor(params, E, T_START)
    s = np.exp(rho * T_START)
    y0 = np.concatenate([s * u0, s * (du0 + rho * u0)]).astype(complex)
    shift = lams**2 + 2 * rho**2

    def rhs(t, y):
        A = params.radial_coefficient(t)
        w, dw = y[:L], y[L:]
        return np.concatenate([dw, -(A - 2 * rho) * dw - (shift - A * rho) * w])

    sol = solve_ivp(
        rhs,
        (T_START, float(t_eval[-1])),
        y0,
        method="DOP853",
        t_eval=t_eval,
        rtol=ODE_RTOL,
        atol=ODE_ATOL,
    )
    if sol.status != 0:
        t_fail = sol.t[-1] if sol.t.size else T_START
        raise ConvergenceError(f"ODE step-size failure near t={t_fail:.6g}: {sol.message}")
    decay = np.exp(-rho * t_eval)
    w, dw = sol.y[:L], sol.y[L:]
    return w * decay, (dw - rho * w) * decay


def ode_table(params: SpaceParams, lams, t, derivative: bool = False):
    """phi_lambda(t) (and optionally d/dt) by ODE, shape (len(lams), len(t)).

    Nodes below the launch point use the Taylor polynomial directly.
    """
    lams = _as_lambda_array(lams)
    t = np.asarray(t, dtype=float)
    order = np.argsort(t)
    ts = t[order]
    val = np.empty((lams.size, t.size), dtype=complex)
    der = np.empty_like(val)
    small = ts < T_START
    E = lams**2 + params.rho**2
    if np.any(small):
        u, du = _taylor(params, E[:, None], ts[small][None, :])
        val[:, order[small]] = u
        der[:, order[small]] = du
    big = ~small
    if np.any(big):
        for a in range(0, lams.size, ODE_BATCH):
            chunk = slice(a, a + ODE_BATCH)
            u, du = _ode_chunk(params, lams[chunk], ts[big])
            val[chunk, order[big]] = u
            der[chunk, order[big]] = du
    return (val, der) if derivative else val


def phi_ode(params: SpaceParams, lam: complex, grid: RadialGrid) -> RadialFunction:
    """phi_lambda on the grid from the radial eigen-equation."""
    vals = ode_table(params, [lam], grid.t_nodes)[0]
    return RadialFunction(grid, vals, 1.0)


# ---------------------------------------------------------------------------
# c-function


def _fit_offsets():
    steps = np.arange(1, 113) * 0.25
    alt = np.empty(2 * steps.size + 1)
    alt[0] = 0.0
    alt[1::2] = steps
    alt[2::2] = -steps
    dt = (FIT_T2 - FIT_T1) + alt
    return dt[(dt >= 2.0)]


def _fit_c_batch(params: SpaceParams, lams, t1: float = FIT_T1, t2: float = FIT_T2):
    """Fit e^{-rho t}(c+ e^{i lam t} + c- e^{-i lam t}) to the ODE at t1 < t2.

    When |sin(lam (t2 - t1))| < 0.3 the second radius is moved (nearest
    admissible offset first) so the 2x2 system stays well conditioned.
    """
    lams = _as_lambda_array(lams)
    if np.any(lams == 0):
        raise UnsupportedError("c-function extraction is degenerate at lambda = 0")
    if np.any(np.abs(lams.imag) >= params.rho):
        raise ValueError("need |Im lambda| < rho")
    base = t2 - t1
    offsets = _fit_offsets() - (FIT_T2 - FIT_T1) + base
    offsets = offsets[offsets >= min(2.0, base)]
    sines = np.abs(np.sin(lams[:, None] * offsets[None, :]))
    ok = sines >= FIT_MIN_SIN
    pick = np.where(ok.any(axis=1), np.argmax(ok, axis=1), np.argmax(sines, axis=1))
    dts = offsets[pick]
    if np.any(np.abs(np.sin(lams * dts)) < 1e-6):
        raise IllConditionedError("two-radius fit is singular for some lambda")
    radii = np.unique(np.concatenate([[t1], t1 + dts]))
    table = ode_table(params, lams, radii)
    rows = np.arange(lams.size)
    w1 = table[:, 0] * np.exp(params.rho * t1)
    w2 = table[rows, np.searchsorted(radii, t1 + dts)] * np.exp(params.rho * (t1 + dts))
    e1p, e1m = np.exp(1j * lams * t1), np.exp(-1j * lams * t1)
    e2p, e2m = np.exp(1j * lams * (t1 + dts)), np.exp(-1j * lams * (t1 + dts))
    det = e1p * e2m - e1m * e2p
    c_plus = (w1 * e2m - e1m * w2) / det
    c_minus = (e1p * w2 - w1 * e2p) / det
    return c_plus, c_minus


def extract_c_function(params: SpaceParams, lam: complex, t1: float = FIT_T1, t2: float = FIT_T2):
    """Return (c(lambda), c(-lambda)) from a two-radius ODE fit."""
    cp, cm = _fit_c_batch(params, [lam], t1, t2)
    return complex(cp[0]), complex(cm[0])


def plancherel_density(params: SpaceParams, lam) -> np.ndarray:
    """|c(lambda)|^-2 on real nodes; the value at 0 is continued evenly.

    The continuation interpolates a + b lambda^2 + c lambda^4 (a quadratic in
    lambda^2) through three helper nodes CONTINUATION_STEP * (1, 2, 3).  Their
    spacing is finer than a typical grid so the O(step^6) interpolation error
    stays far below the quadrature error.
    """
    lam = np.abs(np.atleast_1d(np.asarray(lam, dtype=float)))
    out = np.empty(lam.size)
    pos = lam > 0
    if np.any(pos):
        cp, _ = _fit_c_batch(params, lam[pos])
        out[pos] = np.abs(cp) ** -2
    if np.any(~pos):
        nodes = CONTINUATION_STEP * np.arange(1, 4)
        vals = np.abs(_fit_c_batch(params, nodes)[0]) ** -2
        design = np.stack([np.ones(3), nodes**2, nodes**4], axis=1)
        coef = np.linalg.solve(design, vals)
        out[~pos] = max(coef[0], 0.0)
    return out


# ---------------------------------------------------------------------------
# Series path


@dataclass(frozen=True)
class HCExpansion:
    """Data of the expansion phi = c(lam) Phi_lam + c(-lam) Phi_-lam."""

    lam: complex
    c_plus: complex
    c_minus: complex
    gammas: GammaCoeffs
    gammas_minus: GammaCoeffs
    t_switch: float = 1.0


def hc_expansion(params: SpaceParams, lam: complex, K: int = K_MAX, t_switch: float = 1.0, method: str = "auto"):
    """Build an HCExpansion.

    ``method="fit"`` takes c from the two-radius fit, ``"match"`` matches value
    and slope to the ODE at ``t_switch``.  ``"auto"`` fits for real lambda and
    matches otherwise: off the real axis one exponential dominates at large
    radius and the fit loses the other coefficient.
    """
    lam = complex(lam)
    gp = gamma_coeffs(params, lam, K)
    gm = gamma_coeffs(params, -lam, K)
    if method == "auto":
        method = "fit" if abs(lam.imag) < 1e-14 else "match"
    if method == "fit":
        cp, cm = extract_c_function(params, lam)
    elif method == "match":
        val, der = ode_table(params, [lam], [t_switch], derivative=True)
        cp, cm = _match(params, np.array([lam]), gp.coeffs[None], gm.coeffs[None], np.array([t_switch]),
                        val[:, 0], der[:, 0])
        cp, cm = complex(cp[0]), complex(cm[0])
    else:
        raise ValueError(f"unknown method {method!r}")
    return HCExpansion(lam, cp, cm, gp, gm, float(t_switch))


def _hc_point(params, lams, coeffs, t):
    """Phi_lam(t) and d/dt at one radius per lambda (diagonal evaluation)."""
    z = np.exp(-2 * t)
    K = coeffs.shape[1]
    s = np.zeros(lams.size, dtype=complex)
    ds = np.zeros(lams.size, dtype=complex)
    for k in range(K - 1, -1, -1):
        ds = ds * z + s
        s = s * z + coeffs[:, k]
    pref = np.exp((1j * lams - params.rho) * t)
    return pref * s, pref * ((1j * lams - params.rho) * s - 2 * z * ds)


def _match(params, lams, gp, gm, t_s, val, der):
    """Solve for c(+-lam) from phi and phi' at t_s."""
    pp, dpp = _hc_point(params, lams, gp, t_s)
    pm, dpm = _hc_point(params, -lams, gm, t_s)
    det = pp * dpm - pm * dpp
    return (val * dpm - pm * der) / det, (pp * der - dpp * val) / det


def _series_terms(params, lam, coeffs, t):
    z = np.exp(-2 * t)
    k = np.arange(coeffs.size)
    terms = coeffs[None, :] * z[:, None] ** k[None, :]
    return terms


def phi_series(params: SpaceParams, expansion: HCExpansion, t):
    """Evaluate the two-sided expansion at t >= t_switch (scalar or array).

    If the stored truncation leaves a last term above 1e-12 of the partial
    sum, the coefficients are recomputed to K=200; failing that a
    ConvergenceError is raised.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < expansion.t_switch - 1e-12):
        raise ValueError(f"series evaluation needs t >= t_switch = {expansion.t_switch}")
    lam = expansion.lam
    gp, gm = expansion.gammas.coeffs, expansion.gammas_minus.coeffs
    for attempt in range(2):
        tp = _series_terms(params, lam, gp, t_arr)
        tm = _series_terms(params, -lam, gm, t_arr)
        sp, sm = tp.sum(axis=1), tm.sum(axis=1)
        tail = np.maximum(np.abs(tp[:, -1]) / np.abs(sp), np.abs(tm[:, -1]) / np.abs(sm))
        if np.all(tail < SERIES_TOL):
            break
        if attempt == 0 and gp.size - 1 < K_MAX:
            gp = gamma_coeffs(params, lam, K_MAX).coeffs
            gm = gamma_coeffs(params, -lam, K_MAX).coeffs
            continue
        raise ConvergenceError(f"series tail {np.max(tail):.3g} not below {SERIES_TOL} at K={gp.size - 1}")
    out = np.exp(-params.rho * t_arr) * (
        expansion.c_plus * np.exp(1j * lam * t_arr) * sp + expansion.c_minus * np.exp(-1j * lam * t_arr) * sm
    )
    return complex(out[0]) if np.ndim(t) == 0 else out


# ---------------------------------------------------------------------------
# Fast table


def default_switch(lams) -> np.ndarray:
    """Seam radius clip(3/|lambda|, 0.25, 1) between the two representations."""
    a = np.abs(_as_lambda_array(lams))
    with np.errstate(divide="ignore"):
        return np.clip(3.0 / a, 0.25, 1.0)


def _hyp_coeffs(params, lams, K):
    """Taylor coefficients in x = tanh^2 t of 2F1(A, C-B; C; x)."""
    A = (params.rho + 1j * lams) / 2
    CB = (params.dim - params.rho + 1j * lams) / 2
    C = params.dim / 2
    out = np.empty((lams.size, K), dtype=complex)
    out[:, 0] = 1.0
    for k in range(K - 1):
        out[:, k + 1] = out[:, k] * (A + k) * (CB + k) / ((C + k) * (k + 1))
    return out


def _hyp_kmax(x, K):
    with np.errstate(divide="ignore"):
        need = np.where(x > 0, np.ceil(45.0 / -np.log(np.maximum(x, 1e-300))) + 40, 1)
    return np.minimum(need, K).astype(np.int64)


def _hc_kmax(t, K):
    return np.minimum(np.ceil((40 + 3 * np.log(K)) / (2 * t)) + 10, K).astype(np.int64)


def _hyp_values(params, lams, hc, t, kmax_fn):
    """phi and phi' from the hypergeometric form at radii t (all lambdas)."""
    x = np.tanh(t) ** 2
    val, der = kernels.power_series(hc, x, kmax_fn(x))
    a = params.rho + 1j * lams[:, None]
    pref = np.cosh(t)[None, :] ** (-a)
    th = np.tanh(t)[None, :]
    phi = pref * val
    dphi = pref * (-a * th * val + der * 2 * th * (1 - th**2))
    return phi, dphi


def phi_table(params: SpaceParams, lams, t, t_switch=None, derivative: bool = False):
    """phi_lambda(t) for many lambdas and radii, shape (len(lams), len(t)).

    ``t_switch`` (scalar or per-lambda) overrides the default seam; fixing it
    across a finite-difference stencil in lambda keeps the stencil smooth.
    lambda = 0 and lambdas on the degenerate set fall back to the ODE.
    """
    lams = _as_lambda_array(lams)
    t = np.asarray(t, dtype=float)
    L = lams.size
    ts = default_switch(lams) if t_switch is None else np.broadcast_to(np.asarray(t_switch, float), (L,)).copy()
    out = np.empty((L, t.size), dtype=complex)
    dout = np.empty_like(out)
    fallback = (np.abs(lams) < 1e-12) | _degenerate(lams, K_MAX) | _degenerate(-lams, K_MAX)
    idx = np.nonzero(~fallback)[0]
    if idx.size:
        lf = lams[idx]
        tsf = ts[idx]
        hyp = _hyp_coeffs(params, lf, HYP_TERMS)
        gp = _gamma_table(params, lf, K_MAX)
        gm = _gamma_table(params, -lf, K_MAX)
        # seam values, one radius per lambda
        xs = np.tanh(tsf) ** 2
        km = _hyp_kmax(xs, HYP_TERMS)
        sv = np.zeros(idx.size, dtype=complex)
        sd = np.zeros(idx.size, dtype=complex)
        for k in range(int(km.max()) - 1, -1, -1):
            live = k < km
            sd = np.where(live, sd * xs + sv, sd)
            sv = np.where(live, sv * xs + hyp[:, k], sv)
        a = params.rho + 1j * lf
        pref = np.cosh(tsf) ** (-a)
        th = np.tanh(tsf)
        phi_s = pref * sv
        dphi_s = pref * (-a * th * sv + sd * 2 * th * (1 - th**2))
        cp, cm = _match(params, lf, gp, gm, tsf, phi_s, dphi_s)
        inner = t < tsf.max()
        outer = t >= tsf.min()
        res = np.empty((idx.size, t.size), dtype=complex)
        dres = np.empty_like(res)
        with np.errstate(over="ignore", invalid="ignore"):
            if np.any(inner):
                ph, dph = _hyp_values(params, lf, hyp, t[inner], lambda x: _hyp_kmax(x, HYP_TERMS))
                res[:, inner] = ph
                dres[:, inner] = dph
            if np.any(outer):
                to = t[outer]
                z = np.exp(-2 * to)
                kmax = _hc_kmax(to, K_MAX + 1)
                sp, dsp = kernels.power_series(gp, z, kmax)
                sm, dsm = kernels.power_series(gm, z, kmax)
                ep = np.exp((1j * lf[:, None] - params.rho) * to[None, :])
                em = np.exp((-1j * lf[:, None] - params.rho) * to[None, :])
                val = cp[:, None] * ep * sp + cm[:, None] * em * sm
                dval = cp[:, None] * ep * ((1j * lf[:, None] - params.rho) * sp - 2 * z * dsp) + cm[
                    :, None
                ] * em * ((-1j * lf[:, None] - params.rho) * sm - 2 * z * dsm)
                use = to[None, :] >= tsf[:, None]
                res[:, outer] = np.where(use, val, res[:, outer] if np.any(inner) else val)
                dres[:, outer] = np.where(use, dval, dres[:, outer] if np.any(inner) else dval)
        out[idx] = res
        dout[idx] = dres
    fb = np.nonzero(fallback)[0]
    if fb.size:
        v, dv = ode_table(params, lams[fb], t, derivative=True)
        out[fb] = v
        dout[fb] = dv
    return (out, dout) if derivative else out


# ---------------------------------------------------------------------------
# lambda-derivatives


def phi_lambda_derivative(params: SpaceParams, lambda0: float, order: int, grid: RadialGrid,
                          h: float = 1e-4) -> RadialFunction:
    """d^n/dlambda^n phi_lambda at lambda0 > 0 for n in {1, 2}.

    Central differences with steps h and h/2 combined by one Richardson step.
    The seam is frozen at its lambda0 position for every stencil point.  The
    growth constant max |d^n phi| / ((1+t)^n phi_0) is stored in
    ``diagnostics["growth_constant"]``.
    """
    if not lambda0 > 0:
        raise ValueError("lambda0 must be positive")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    offs = np.array([-h, -h / 2, 0.0, h / 2, h])
    t = grid.t_nodes
    tab = phi_table(params, lambda0 + offs, t, t_switch=float(default_switch(lambda0)[0]))
    m, mh, c, ph, p = tab
    if order == 1:
        coarse = (p - m) / (2 * h)
        fine = (ph - mh) / h
    else:
        coarse = (p - 2 * c + m) / h**2
        fine = (ph - 2 * c + mh) / (h / 2) ** 2
    deriv = (4 * fine - coarse) / 3
    phi0 = np.real(phi_table(params, [0.0], t)[0])
    growth = float(np.max(np.abs(deriv) / ((1 + t) ** order * phi0)))
    return RadialFunction(grid, deriv, 0.0, {"growth_constant": growth, "h": h, "order": order})
