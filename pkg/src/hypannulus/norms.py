"""Lorentz quasi-norms on discrete weighted half-lines and derived functionals.

A discrete measure space (nodes with positive weights) makes every function a
step function, so the decreasing rearrangement is exact: sort |f| in
decreasing order against the cumulative weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import RadialFunction, RadialGrid, _trapezoid_with_ends

__all__ = [
    "WeightedHalfLine",
    "LorentzResult",
    "MembershipResult",
    "radial_space",
    "exponential_half_line",
    "distribution_function",
    "rearrangement",
    "sweep_quasinorm",
    "lorentz_quasinorm",
    "weak_l2_membership_diagnostic",
    "weighted_M_norm",
    "mp_functional",
    "kpq_functional",
    "kq_profile",
]

SWEEP_LEVELS = 512
SWEEP_SPAN = 1e-12
DIVERGENCE_SLOPE = 0.1
SETTLE_TOL = 0.02


@dataclass(frozen=True, eq=False)
class WeightedHalfLine:
    """Nodes and positive weights of a 1-D measure space."""

    t_nodes: np.ndarray
    weights: np.ndarray
    total_mass_diagnostic: float = field(default=None)

    def __post_init__(self):
        t = np.asarray(self.t_nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if t.shape != w.shape:
            raise ValueError("nodes and weights must have equal length")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if np.any(np.diff(t) <= 0):
            raise ValueError("nodes must be increasing")
        object.__setattr__(self, "t_nodes", t)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "total_mass_diagnostic", float(w.sum()))

    def __len__(self):
        return self.t_nodes.size


def radial_space(grid: RadialGrid, t_cut: float | None = None) -> WeightedHalfLine:
    """The discrete radial measure of a grid, optionally truncated at t_cut."""
    mask = np.ones(len(grid), bool) if t_cut is None else grid.truncate(t_cut)
    return WeightedHalfLine(grid.t_nodes[mask], grid.measure[mask])


def exponential_half_line(rho: float, t_min: float = 1.0, t_max: float = 25.0, n_nodes: int = 4001,
                          order: int = 8) -> WeightedHalfLine:
    """([t_min, t_max], e^{2 rho t} dt) with an endpoint-corrected trapezoid rule."""
    t = np.linspace(t_min, t_max, n_nodes)
    w = (t[1] - t[0]) * _trapezoid_with_ends(n_nodes - 1, order) * np.exp(2 * rho * t)
    return WeightedHalfLine(t, w)


def _moduli(values, space):
    v = np.abs(np.asarray(values))
    if v.shape != space.t_nodes.shape:
        raise ValueError("values must match the space nodes")
    return v


def distribution_function(values, space: WeightedHalfLine, alpha):
    """d_f(alpha): total weight of nodes with |f| > alpha (scalar or array alpha)."""
    v = _moduli(values, space)
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0):
        raise ValueError("alpha must be nonnegative")
    order = np.argsort(v)
    vs, cw = v[order], np.concatenate([[0.0], np.cumsum(space.weights[order][::-1])])[::-1]
    # cw[j] = total weight of sorted nodes j..end
    idx = np.searchsorted(vs, a, side="right")
    out = cw[idx]
    return float(out) if np.ndim(alpha) == 0 else out


def rearrangement(values, space: WeightedHalfLine):
    """(s_i, f*(s_i)): cumulative weights and the sorted moduli, decreasing."""
    v = _moduli(values, space)
    order = np.argsort(-v, kind="stable")
    return np.cumsum(space.weights[order]), v[order]


@dataclass
class LorentzResult:
    """A Lorentz quasi-norm with the data that produced it."""

    value: float
    p: float
    q: float
    sup_location: int | None
    rearrangement: tuple
    sweep_value: float | None = None
    diagnostics: dict = field(default_factory=dict)


def lorentz_quasinorm(values, space: WeightedHalfLine, p: float, q: float = np.inf) -> LorentzResult:
    """||f||*_{p,q} of a step function on a discrete measure space.

    q = inf: max_i f*(s_i) s_i^{1/p}, the exact supremum of alpha d_f(alpha)^{1/p}
    (approached as alpha rises to each sorted value).  The 512-level geometric
    alpha-sweep is reported alongside as ``sweep_value``; it can only
    undershoot.  ``sup_location`` indexes the sorted curve.

    q < inf: ((q/p) integral (s^{1/p} f*(s))^q ds/s)^{1/q}, integrated exactly
    for the step rearrangement: sum_i f*_i^q (s_i^{q/p} - s_{i-1}^{q/p}).
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not q >= 1:
        raise ValueError("q must be at least 1")
    s, fs = rearrangement(values, space)
    if fs.size == 0 or fs[0] == 0:
        return LorentzResult(0.0, p, q, None, (np.empty(0), np.empty(0)), 0.0 if np.isinf(q) else None)
    if np.isinf(q):
        curve = fs * s ** (1 / p)
        i = int(np.argmax(curve))
        return LorentzResult(float(curve[i]), p, q, i, (s, fs), sweep_quasinorm(values, space, p))
    s_prev = np.concatenate([[0.0], s[:-1]])
    value = float(np.sum(fs**q * (s ** (q / p) - s_prev ** (q / p))) ** (1 / q))
    return LorentzResult(value, p, q, None, (s, fs))


def sweep_quasinorm(values, space: WeightedHalfLine, p: float, levels: int = SWEEP_LEVELS) -> float:
    """sup over a geometric alpha-sweep of alpha d_f(alpha)^{1/p}."""
    v = _moduli(values, space)
    top = v.max()
    if top == 0:
        return 0.0
    alphas = top * np.geomspace(SWEEP_SPAN, 1.0, levels)
    return float(np.max(alphas * distribution_function(v, space, alphas) ** (1 / p)))


# ---------------------------------------------------------------------------
# Radial-function conveniences


def _cut_values(f: RadialFunction, t_cut):
    return f.values if t_cut is None else f.values[f.grid.truncate(t_cut)]


@dataclass
class MembershipResult:
    """Verdict of the truncation sweep: bounded, diverging or inconclusive."""

    verdict: str
    t_max_sweep: np.ndarray
    norms: np.ndarray
    slope: float
    last_change: float


def weak_l2_membership_diagnostic(f: RadialFunction, t_max_sweep=(10.0, 15.0, 20.0, 25.0),
                                  norm=None) -> MembershipResult:
    """Classify membership in L^{2,inf} from norms truncated at increasing radii.

    The log-log slope of norm against t_max above 0.1 means diverging; a
    slope at most 0.1 together with the last two norms within 2% means
    bounded; anything else is inconclusive.  ``norm(values, space)`` may
    replace the weak-L^2 quasi-norm.
    """
    sweep = np.asarray(sorted(t_max_sweep), dtype=float)
    if sweep.size < 3:
        raise ValueError("need at least three truncation radii")
    if sweep[-1] > f.grid.t_max * (1 + 1e-12):
        raise ValueError("truncation radius beyond the grid")
    measure = norm or (lambda v, sp: lorentz_quasinorm(v, sp, 2, np.inf).value)
    norms = np.array([measure(_cut_values(f, T), radial_space(f.grid, T)) for T in sweep])
    if np.all(norms == 0):
        return MembershipResult("bounded", sweep, norms, 0.0, 0.0)
    slope = float(np.polyfit(np.log(sweep), np.log(norms), 1)[0])
    change = float(abs(norms[-1] - norms[-2]) / norms[-1])
    if slope > DIVERGENCE_SLOPE:
        verdict = "diverging"
    elif change <= SETTLE_TOL:
        verdict = "bounded"
    else:
        verdict = "inconclusive"
    return MembershipResult(verdict, sweep, norms, slope, change)


def weighted_M_norm(f: RadialFunction, M: int, t_cut: float | None = None) -> float:
    """||f||_M = ||f (1+t)^{-M}||_{2,inf} on the radial measure."""
    if M < 0 or int(M) != M:
        raise ValueError("M must be a nonnegative integer")
    g = _cut_values(f, t_cut) * (1 + f.grid.t_nodes[f.grid.truncate(t_cut or f.grid.t_max)]) ** (-M)
    return lorentz_quasinorm(g, radial_space(f.grid, t_cut), 2, np.inf).value


def mp_functional(f: RadialFunction, p: float, r_sweep, return_diagnostics: bool = False,
                  settle_tol: float = 0.05):
    """Surrogate for limsup_r ((1/r) integral_{B(0,r)} |f|^p)^{1/p}.

    The limsup becomes the max over the top half of ``r_sweep``; the sweep is
    flagged unsettled when the last two averages differ by more than
    ``settle_tol`` (relative).
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    r = np.asarray(sorted(r_sweep), dtype=float)
    grid = f.grid
    dens = grid.measure * np.abs(f.values) ** p
    cum = np.cumsum(dens)
    idx = np.searchsorted(grid.t_nodes, r * (1 + 1e-12), side="right") - 1
    curve = np.where(idx >= 0, cum[np.maximum(idx, 0)], 0.0) / r
    top = curve[r.size // 2 :]
    value = float(top.max() ** (1 / p))
    settled = bool(curve[-1] == 0 or abs(curve[-1] - curve[-2]) <= settle_tol * max(curve[-1], curve[-2]))
    if return_diagnostics:
        return value, {"r": r, "curve": curve, "settled": settled}
    return value


def kq_profile(pf, q: float) -> np.ndarray:
    """K-orbit average (mean over theta of |f|^q)^{1/q} at each radial node."""
    if not q >= 1:
        raise ValueError("q must be at least 1")
    return np.mean(np.abs(pf.values) ** q, axis=1) ** (1 / q)


def kpq_functional(pf, q: float, t_cut: float | None = None) -> float:
    """K_{2,q}(f) = ||K_q(f)||_{2,inf} on the radial measure of the polar grid."""
    prof = kq_profile(pf, q)
    mask = np.ones(prof.size, bool) if t_cut is None else pf.grid.truncate(t_cut)
    return lorentz_quasinorm(prof[mask], radial_space(pf.grid, t_cut), 2, np.inf).value
