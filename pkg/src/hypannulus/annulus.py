"""Laplacian powers, norm-growth sequences, limit extraction and annulus classification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import norms as nm
from ._fd import fd_weights, t_derivatives
from .core import _grid_map, RadialFunction, RadialGrid, SpaceParams, SpectralFunction, SpectralGrid
from .errors import GridError, RelationError, ResolutionError
from .spherical import phi_lambda_derivative, phi_table
from .transforms import inverse_spherical_transform, spherical_transform

__all__ = [
    "SpectralProfile",
    "NormSequence",
    "AnnulusReport",
    "GeneralizedResidual",
    "make_profile",
    "laplacian_power_spectral",
    "radial_laplacian_spatial",
    "synthesize_bandlimited",
    "eigenfunction_input",
    "norm_sequence",
    "estimate_limits",
    "classify",
    "sequence_mode_ingest",
    "generalized_eigen_residual",
    "eigen_residual",
    "best_fit_eigen_residual",
    "parse_norm_tag",
    "analyse",
    "strip_pair",
]

LOG_DOMAIN_THRESHOLD = 30
TOL_CLASS = 1e-2
MIN_BAND_NODES = 16
RELATION_TOL = 1e-5
MONOTONE_TOL = 1e-3


# ---------------------------------------------------------------------------
# Spectral profiles


@dataclass
class SpectralProfile:
    """A band profile on [beta, alpha] sampled on a spectral grid."""

    beta: float
    alpha: float
    shape: str
    parameters: dict
    values: np.ndarray


def _shape(shape, x):
    """Unit-interval profile; both shapes vanish at x = 0 and x = 1."""
    if shape == "raised-cosine":
        return 0.5 * (1 - np.cos(2 * np.pi * x))
    if shape == "smooth-bump":
        out = np.zeros_like(x)
        inside = (x > 0) & (x < 1)
        u = 2 * x[inside] - 1
        out[inside] = np.exp(1 - 1 / (1 - u**2))
        return out
    raise ValueError(f"unknown profile shape {shape!r}")


def make_profile(sgrid: SpectralGrid, beta: float, alpha: float, shape: str = "raised-cosine",
                 amplitude: float = 1.0) -> SpectralProfile:
    """Sample a band profile; needs at least 16 spectral nodes inside [beta, alpha]."""
    if not 0 <= beta < alpha:
        raise ValueError("need 0 <= beta < alpha")
    lam = sgrid.lambda_nodes
    if alpha > sgrid.lambda_max * (1 + 1e-12):
        raise GridError(f"band top {alpha} beyond lambda_max {sgrid.lambda_max}")
    tol = 1e-9 * sgrid.step
    inside = (lam >= beta - tol) & (lam <= alpha + tol)
    if inside.sum() < MIN_BAND_NODES:
        raise GridError(f"band [{beta}, {alpha}] holds {inside.sum()} spectral nodes; need {MIN_BAND_NODES}")
    x = np.clip((lam - beta) / (alpha - beta), 0.0, 1.0)
    vals = np.where(inside, amplitude * _shape(shape, x), 0.0)
    return SpectralProfile(beta, alpha, shape, {"amplitude": amplitude}, vals.astype(complex))


def synthesize_bandlimited(profile: SpectralProfile, grid: RadialGrid, sgrid: SpectralGrid) -> RadialFunction:
    """The radial function whose spherical transform is the profile."""
    return inverse_spherical_transform(SpectralFunction(sgrid, profile.values), grid)


def eigenfunction_input(sgrid: SpectralGrid, lam, weight=1.0) -> SpectralFunction:
    """A spectral object representing weight * phi_lam (one atom, no continuous part)."""
    lams = np.atleast_1d(lam)
    weights = np.broadcast_to(np.asarray(weight, dtype=complex), lams.shape)
    return SpectralFunction(sgrid, np.zeros(len(sgrid)), tuple(zip(lams, weights)))


def strip_pair(params: SpaceParams, delta: float, p: float = 1.5, fractions=(0.9, -0.3)):
    """Two complex lambda with |lambda^2 + rho^2| = delta inside the strip |Im| < |2/p - 1| rho.

    ``fractions`` set Im lambda_i as multiples of the strip half-width; opposite
    signs give the two eigenvalues distinct phases.
    """
    width = abs(2 / p - 1) * params.rho
    if not all(abs(fr) < 1 for fr in fractions):
        raise ValueError("fractions must lie in (-1, 1)")
    rho2 = params.rho**2
    if delta <= rho2:
        raise ValueError("delta must exceed rho^2")

    def lam(theta):
        return np.sqrt(-rho2 + delta * np.exp(1j * theta))

    out = []
    for fr in fractions:
        target = fr * width
        lo, hi = (0.0, np.pi / 2) if target >= 0 else (-np.pi / 2, 0.0)
        theta = brentq(lambda th: lam(th).imag - target, lo, hi)
        out.append(complex(lam(theta)))
    return tuple(out)


# ---------------------------------------------------------------------------
# Powers of the Laplacian


def laplacian_power_spectral(fhat: SpectralFunction, n: int, params: SpaceParams) -> SpectralFunction:
    """Multiply by (-1)^n (lambda^2 + rho^2)^n, atoms included.

    For |n| > 30 the largest multiplier modulus on the support is moved into
    ``log_scale`` so the stored samples stay O(1).
    """
    n = int(n)
    if n == 0:
        return SpectralFunction(fhat.grid, fhat.values.copy(), fhat.atoms, fhat.log_scale)
    E = params.eigenvalue(fhat.grid.lambda_nodes)
    atoms = fhat.atoms
    Ea = np.array([params.eigenvalue(l) for l, _ in atoms], dtype=complex)
    if abs(n) <= LOG_DOMAIN_THRESHOLD:
        vals = fhat.values * (-E) ** n
        new_atoms = tuple((l, w * (-e) ** n) for (l, w), e in zip(atoms, Ea))
        return SpectralFunction(fhat.grid, vals, new_atoms, fhat.log_scale)
    support = np.abs(fhat.values) > 0
    mods = np.concatenate([E[support], np.abs(Ea)])
    ref = np.max(mods) if n > 0 else np.min(mods)
    log_ref = np.log(ref)
    sign = -1.0 if n % 2 else 1.0
    vals = np.where(support, sign * np.exp(n * (np.log(E) - log_ref)), 0.0) * fhat.values
    new_atoms = tuple((l, w * np.exp(n * (np.log(-e) - log_ref))) for (l, w), e in zip(atoms, Ea))
    return SpectralFunction(fhat.grid, vals, new_atoms, fhat.log_scale + n * log_ref)


def radial_laplacian_spatial(f: RadialFunction, params: SpaceParams | None = None,
                             check: bool = True) -> RadialFunction:
    """f'' + (m_gamma coth t + 2 m_2gamma coth 2t) f' by fourth-order differences.

    The origin uses the even extension f(-t) = f(t); there the operator equals
    dim * f''(0).  The resolution check rejects samples whose second
    differences exceed 10% of sup |f|.
    """
    grid = f.grid
    params = params or grid.params
    v = f.values
    if check:
        ext = np.concatenate([[f.value_at_origin], v])
        if np.max(np.abs(np.diff(ext, 2))) > 0.1 * max(np.max(np.abs(ext)), 1e-300):
            raise ResolutionError("samples vary too fast for second differences; refine the grid")
    ft, ftt = t_derivatives(grid, v, f.value_at_origin, v)
    lap = ftt + params.radial_coefficient(grid.t_nodes) * ft
    c2 = fd_weights((-2, -1, 0, 1, 2), 2)
    around = np.array([v[1], v[0], f.value_at_origin, v[0], v[1]])
    f_ss0 = complex(c2 @ around) / grid.s_step**2
    dt0 = float(_grid_map(grid.grading, np.zeros(1))[1][0])
    return RadialFunction(grid, lap, params.dim * f_ss0 / dt0**2)


def eigen_residual(f: RadialFunction, E: complex) -> float:
    """max |L f + E f| / max |f| on the grid."""
    r = radial_laplacian_spatial(f, check=False).values + E * f.values
    return float(np.max(np.abs(r)) / np.max(np.abs(f.values)))


def best_fit_eigen_residual(f: RadialFunction, t_cut: float | None = None):
    """Least-squares E for L f ~ -E f and the residual max |L f + E f| / max |f|."""
    mask = np.ones(len(f.grid), bool) if t_cut is None else f.grid.truncate(t_cut)
    Lf = radial_laplacian_spatial(f, check=False).values[mask]
    v = f.values[mask]
    E = -complex(np.vdot(v, Lf) / np.vdot(v, v))
    return float(np.max(np.abs(Lf + E * v)) / np.max(np.abs(v))), E


# ---------------------------------------------------------------------------
# Norm sequences


def parse_norm_tag(tag: str):
    """Map a norm tag to (evaluator(values, space), kind).

    Tags: ``weak-l2``, ``l2``, ``weighted:M``, ``mp:p``, ``lpq:p,q``.
    """
    tag = tag.strip().lower()
    if tag in ("weak-l2", "weak_l2", "l2inf"):
        return (lambda v, sp: nm.lorentz_quasinorm(v, sp, 2, np.inf).value), "weak-l2"
    if tag == "l2":
        return (lambda v, sp: nm.lorentz_quasinorm(v, sp, 2, 2).value), "l2"
    if tag.startswith("weighted:"):
        M = int(tag.split(":", 1)[1])
        if M < 0:
            raise ValueError("weighted norm needs M >= 0")

        def weighted(v, sp):
            return nm.lorentz_quasinorm(v * (1 + sp.t_nodes) ** (-M), sp, 2, np.inf).value

        return weighted, "weighted"
    if tag.startswith("mp:"):
        p = float(tag.split(":", 1)[1])
        if not p > 1:
            raise ValueError("mp norm needs p > 1")

        def mp(v, sp):
            # limsup surrogate on the truncated space: max over the top half of radii
            cum = np.cumsum(sp.weights * np.abs(v) ** p)
            r = sp.t_nodes
            half = r >= r[-1] / 2
            return float(np.max(cum[half] / r[half]) ** (1 / p))

        return mp, "mp"
    if tag.startswith("lpq:"):
        p, q = (float(x) for x in tag.split(":", 1)[1].split(","))
        return (lambda v, sp: nm.lorentz_quasinorm(v, sp, p, q).value), "lpq"
    raise ValueError(f"unknown norm tag {tag!r}")


@dataclass
class NormSequence:
    """log_a[n-1] = (1/n) log(||Lap^n f|| / ||f||), log_b likewise for Lap^-n."""

    n_values: np.ndarray
    log_a: np.ndarray
    log_b: np.ndarray
    norm_tag: str
    log_norm0: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n_values = np.asarray(self.n_values, dtype=int)
        self.log_a = np.asarray(self.log_a, dtype=float)
        self.log_b = np.asarray(self.log_b, dtype=float)
        if not (np.all(np.isfinite(self.log_a)) and np.all(np.isfinite(self.log_b))):
            raise ValueError("norm sequence entries must be finite")


def _spatial(fhat: SpectralFunction, grid: RadialGrid):
    """Inverse transform of the stored samples without applying log_scale."""
    unscaled = SpectralFunction(fhat.grid, fhat.values, fhat.atoms, 0.0)
    return inverse_spherical_transform(unscaled, grid, check=False), fhat.log_scale


def norm_sequence(source, N: int, norm_tag: str, grid: RadialGrid, sgrid: SpectralGrid | None = None,
                  t_cut: float | None = None, verdicts: bool = True) -> NormSequence:
    """Norm-growth sequences of Lap^{+-n} f for n = 1..N on the spatial side.

    ``source`` is a RadialFunction (transformed first) or a SpectralFunction.
    Every power is inverse transformed and measured with the tagged norm on the
    radial measure truncated at ``t_cut``.  Per-entry membership verdicts are
    stored in ``diagnostics["verdicts_a"/"verdicts_b"]``; divergence is
    recorded, not fatal.
    """
    if N < 8:
        raise ValueError("need N >= 8")
    params = grid.params
    if isinstance(source, RadialFunction):
        if sgrid is None:
            raise ValueError("a spectral grid is needed to transform a radial source")
        fhat = spherical_transform(source, sgrid)
    else:
        fhat = source
    measure, kind = parse_norm_tag(norm_tag)
    space = nm.radial_space(grid, t_cut)
    mask = np.ones(len(grid), bool) if t_cut is None else grid.truncate(t_cut)
    t_top = grid.t_nodes[mask][-1]
    sweep = [s for s in (10.0, 15.0, 20.0, 25.0) if s <= t_top * (1 + 1e-12)]
    if len(sweep) < 3:
        sweep = list(np.linspace(t_top / 2, t_top, 4))

    def log_norm(spec):
        f, log_scale = _spatial(spec, grid)
        value = measure(f.values[mask], space)
        verdict = None
        if verdicts:
            verdict = nm.weak_l2_membership_diagnostic(f, sweep, norm=measure).verdict
        return np.log(value) + log_scale, verdict

    log0, verdict0 = log_norm(fhat)
    log_a, log_b, va, vb = [], [], [], []
    for n in range(1, N + 1):
        la, ver = log_norm(laplacian_power_spectral(fhat, n, params))
        lb, ver_b = log_norm(laplacian_power_spectral(fhat, -n, params))
        log_a.append((la - log0) / n)
        log_b.append((lb - log0) / n)
        va.append(ver)
        vb.append(ver_b)
    diag = {"verdict_f": verdict0, "verdicts_a": va, "verdicts_b": vb, "kind": kind}
    return NormSequence(np.arange(1, N + 1), log_a, log_b, norm_tag, float(log0), diag)


# ---------------------------------------------------------------------------
# Limits and classification


def _fit_limit(n, y):
    """Least squares y = a + kappa log n / n + mu / n; returns (a, kappa, mu, rms)."""
    X = np.stack([np.ones_like(n, dtype=float), np.log(n) / n, 1.0 / n], axis=1)
    if np.ptp(y) <= 1e-14 * max(1.0, np.max(np.abs(y))):
        return float(np.mean(y)), 0.0, 0.0, 0.0
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    rms = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    return float(coef[0]), float(coef[1]), float(coef[2]), rms


def estimate_limits(seq: NormSequence):
    """Extrapolated limits (c1, c2, diagnostics) from the top half of the sequences.

    The model a + kappa log n / n + mu / n captures band-edge polynomial
    factors (kappa) and the profile constant (mu).  A drop in the tail larger
    than 1e-3 relative raises the ``non_monotone`` flag.
    """
    n = seq.n_values.astype(float)
    if n.size < 8:
        raise ValueError("need at least 8 entries")
    top = n >= n.max() / 2
    a, ka, mua, ra = _fit_limit(n[top], seq.log_a[top])
    b, kb, mub, rb = _fit_limit(n[top], seq.log_b[top])

    def drops(y):
        d = np.diff(y[top])
        return bool(np.any(d < -MONOTONE_TOL * max(1e-12, np.max(np.abs(y[top])))))

    diag = {
        "fit_a": {"limit": a, "kappa": ka, "mu": mua, "rms": ra},
        "fit_b": {"limit": b, "kappa": kb, "mu": mub, "rms": rb},
        "non_monotone_a": drops(seq.log_a),
        "non_monotone_b": drops(seq.log_b),
        "last_a": float(np.exp(seq.log_a[-1])),
        "last_b": float(np.exp(seq.log_b[-1])),
    }
    diag["non_monotone"] = diag["non_monotone_a"] or diag["non_monotone_b"]
    return float(np.exp(a)), float(np.exp(b)), diag


@dataclass
class AnnulusReport:
    """Estimated limits, band edges and the resulting classification."""

    c1: float
    c2: float
    alpha: float
    beta: float
    classification: str
    norm_tag: str
    extrapolation_diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "c1": self.c1,
            "c2": self.c2,
            "alpha": self.alpha,
            "beta": self.beta,
            "classification": self.classification,
            "norm_tag": self.norm_tag,
            "c1c2": self.c1 * self.c2,
        }


def classify(c1: float, c2: float, params: SpaceParams, norm_tag: str = "weak-l2",
             resolution: float = 0.05, tol_class: float = TOL_CLASS, diagnostics: dict | None = None) -> AnnulusReport:
    """Classify estimated limits into a support shape.

    Order: collapse (alpha within ``resolution`` of 0) first, invalid under
    weak-L^2 and a generalized-collapse under weighted norms; then c1 c2 below
    1 - tol_class is inconclusive; |c1 c2 - 1| <= tol_class is an eigenfunction
    sphere; beta within ``resolution`` is a ball; otherwise an annulus.
    """
    rho2 = params.rho**2
    if c1 < rho2 * (1 - tol_class) or c2 > (1 + tol_class) / rho2:
        raise ValueError(f"limits outside the spectrum bounds: c1={c1:.6g} (>= {rho2:.6g}), "
                         f"c2={c2:.6g} (<= {1 / rho2:.6g})")
    alpha = float(np.sqrt(max(c1 - rho2, 0.0)))
    beta = float(np.sqrt(max(1 / c2 - rho2, 0.0)))
    kind = parse_norm_tag(norm_tag)[1]
    prod = c1 * c2
    if alpha <= resolution:
        label = "generalized-collapse" if kind == "weighted" else "invalid-collapse"
    elif prod < 1 - tol_class:
        label = "inconclusive"
    elif abs(prod - 1) <= tol_class:
        label = "eigenfunction-sphere"
    elif beta <= resolution:
        label = "ball"
    else:
        label = "annulus"
    return AnnulusReport(c1, c2, alpha, beta, label, norm_tag, dict(diagnostics or {}))


def analyse(seq: NormSequence, params: SpaceParams, resolution: float = 0.05) -> AnnulusReport:
    """estimate_limits followed by classify; non-monotone tails are reported."""
    c1, c2, diag = estimate_limits(seq)
    report = classify(c1, c2, params, seq.norm_tag, resolution, diagnostics=diag)
    return report


# ---------------------------------------------------------------------------
# Sequence mode


def sequence_mode_ingest(functions, zero_index: int | None = None, norm_tag: str = "weak-l2",
                         t_cut: float | None = None, relation_tol: float = RELATION_TOL) -> NormSequence:
    """Norm sequences from a chain f_k with Lap f_k = f_{k+1}.

    ``functions[j]`` is f_{j - zero_index} (default: the middle entry is f_0).
    Each consecutive pair is checked with the spatial Laplacian; a violation
    raises RelationError carrying the offending k.
    """
    fs = list(functions)
    k0 = len(fs) // 2 if zero_index is None else int(zero_index)
    for j in range(len(fs) - 1):
        lap = radial_laplacian_spatial(fs[j], check=False).values
        nxt = fs[j + 1].values
        err = np.max(np.abs(lap - nxt)) / max(np.max(np.abs(nxt)), 1e-300)
        if err > relation_tol:
            raise RelationError(f"Lap f_{j - k0} differs from f_{j - k0 + 1} by {err:.3g} (relative)", k=j - k0)
    N = min(len(fs) - 1 - k0, k0)
    if N < 8:
        raise ValueError("need at least 8 functions on each side of f_0")
    grid = fs[k0].grid
    measure, _ = parse_norm_tag(norm_tag)
    space = nm.radial_space(grid, t_cut)
    mask = np.ones(len(grid), bool) if t_cut is None else grid.truncate(t_cut)
    logs = {j - k0: np.log(measure(fs[j].values[mask], space)) for j in range(k0 - N, k0 + N + 1)}
    n = np.arange(1, N + 1)
    log_a = [(logs[k] - logs[0]) / k for k in n]
    log_b = [(logs[-k] - logs[0]) / k for k in n]
    return NormSequence(n, log_a, log_b, norm_tag, float(logs[0]), {"mode": "sequence"})


# ---------------------------------------------------------------------------
# Generalized eigenfunctions


@dataclass
class GeneralizedResidual:
    """Residuals of (L + E)^{m+1} g and (L + E) g for g = d^m phi / d lambda^m."""

    residual: float
    single_residual: float
    single_deviation: float | None
    noise_floor: float
    m: int
    lambda0: float
    growth_constant: float | None


def _operator_gain(grid: RadialGrid, params: SpaceParams) -> float:
    """Rough amplification of rounding noise by one application of L + E."""
    h = grid.s_step * grid.dt_ds
    return float(np.max((16 / 3) / h**2 + params.radial_coefficient(grid.t_nodes) * 1.5 / h))


def generalized_eigen_residual(params: SpaceParams, lambda0: float, m: int, grid: RadialGrid,
                               h: float = 1e-4) -> GeneralizedResidual:
    """Apply (L + lambda0^2 + rho^2) m+1 times to g = d^m phi_lambda / d lambda^m at lambda0.

    ``residual`` is max |(L+E)^{m+1} g| / max |g|; ``single_residual`` the same
    for one application (nonzero for m >= 1).  For m = 1 ``single_deviation`` is
    max |(L+E) g + 2 lambda0 phi_lambda0| / max |phi|.  ``noise_floor`` is the
    rounding level of g (eps / h^m) times the operator gain to the power m+1.
    """
    if m not in (0, 1, 2):
        raise ValueError("m must be 0, 1 or 2")
    if not lambda0 > 0:
        raise ValueError("lambda0 must be positive")
    E = lambda0**2 + params.rho**2
    phi = RadialFunction(grid, phi_table(params, [lambda0], grid.t_nodes)[0], 1.0)
    if m == 0:
        g = phi
        growth = None
    else:
        g = phi_lambda_derivative(params, lambda0, m, grid, h=h)
        growth = g.diagnostics["growth_constant"]
    scale = np.max(np.abs(g.values))
    cur = g
    single = None
    deviation = None
    for k in range(m + 1):
        lap = radial_laplacian_spatial(cur, params, check=False)
        cur = RadialFunction(grid, lap.values + E * cur.values, lap.value_at_origin + E * cur.value_at_origin)
        if k == 0:
            single = float(np.max(np.abs(cur.values)) / scale)
            if m == 1:
                deviation = float(np.max(np.abs(cur.values + 2 * lambda0 * phi.values)) / np.max(np.abs(phi.values)))
    residual = float(np.max(np.abs(cur.values)) / scale)
    eps = np.finfo(float).eps
    floor = eps / h**m * _operator_gain(grid, params) ** (m + 1) if m else eps * _operator_gain(grid, params)
    return GeneralizedResidual(residual, single, deviation, float(floor), m, float(lambda0), growth)
