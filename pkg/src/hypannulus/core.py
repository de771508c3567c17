"""Rank-one geometry, radial and spectral grids, and the function containers.

Radial functions live on a grid ``t_1 < ... < t_n = t_max`` that excludes the
origin; the origin value is carried separately.  Grids are images of a uniform
grid in an auxiliary variable ``s`` under a smooth odd map ``t = g(s)``, which
keeps both the endpoint-corrected trapezoid rule and the finite-difference
stencils of the annulus module on a uniform footing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli

from .errors import GridError, TailDominatedError

__all__ = [
    "SpaceParams",
    "RadialGrid",
    "RadialFunction",
    "SpectralGrid",
    "SpectralFunction",
    "make_space",
    "make_radial_grid",
    "make_spectral_grid",
    "integrate_radial",
    "density",
    "gregory_weights",
]

GRADED_WIDTH = 0.5
GRADED_CLUSTER = 0.25


@dataclass(frozen=True)
class SpaceParams:
    """Root multiplicities of a rank-one symmetric space of noncompact type."""

    m_gamma: int
    m_2gamma: int
    rho: float = field(default=None)
    dim: int = field(default=None)

    def __post_init__(self):
        rho = (self.m_gamma + 2 * self.m_2gamma) / 2
        dim = self.m_gamma + self.m_2gamma + 1
        if self.rho is None:
            object.__setattr__(self, "rho", rho)
        if self.dim is None:
            object.__setattr__(self, "dim", dim)
        if self.rho != rho or self.dim != dim:
            raise ValueError("rho and dim are derived from the multiplicities")
        if self.m_gamma < 1 or self.m_2gamma < 0:
            raise ValueError("need m_gamma >= 1 and m_2gamma >= 0")

    @property
    def name(self) -> str:
        if self.m_2gamma == 0:
            return f"H{self.dim}"
        return f"X({self.m_gamma},{self.m_2gamma})"

    def radial_coefficient(self, t):
        """First-order coefficient m_gamma coth t + 2 m_2gamma coth 2t."""
        t = np.asarray(t, dtype=float)
        out = self.m_gamma / np.tanh(t)
        if self.m_2gamma:
            out = out + 2 * self.m_2gamma / np.tanh(2 * t)
        return out

    def eigenvalue(self, lam):
        """lambda^2 + rho^2 (so that Delta phi_lambda = -eigenvalue * phi_lambda)."""
        return np.asarray(lam) ** 2 + self.rho**2


def make_space(m_gamma: int, m_2gamma: int) -> SpaceParams:
    if int(m_gamma) != m_gamma or int(m_2gamma) != m_2gamma:
        raise ValueError("multiplicities must be integers")
    if m_gamma <= 0:
        raise ValueError(f"m_gamma must be positive, got {m_gamma}")
    if m_2gamma < 0:
        raise ValueError(f"m_2gamma must be nonnegative, got {m_2gamma}")
    return SpaceParams(int(m_gamma), int(m_2gamma))


NAMED_SPACES = {"h2": (1, 0), "h3": (2, 0), "h4c": (2, 1)}


def named_space(name: str) -> SpaceParams:
    try:
        return make_space(*NAMED_SPACES[name.lower()])
    except KeyError:
        raise ValueError(f"unknown space {name!r}; choose from {sorted(NAMED_SPACES)}")


def density(params: SpaceParams, t):
    """Radial measure density (sinh t)^m_gamma (sinh 2t)^m_2gamma, constant fixed to 1."""
    t = np.asarray(t, dtype=float)
    return np.sinh(t) ** params.m_gamma * np.sinh(2 * t) ** params.m_2gamma


@lru_cache(maxsize=None)
def gregory_weights(order: int = 8) -> np.ndarray:
    """Left-endpoint corrections c_0..c_{order-1} to the unit-step trapezoid rule.

    Adding ``c_j`` to the weight of node ``j`` makes the rule exact for
    polynomials of degree < ``order`` near that end (Euler-Maclaurin).
    """
    B = bernoulli(order + 1)
    q = np.arange(order)
    rhs = np.array([B[k + 1] / (k + 1) if k % 2 == 1 else 0.0 for k in q])
    V = np.vander(np.arange(order, dtype=float), order, increasing=True).T
    return np.linalg.solve(V, rhs)


def _trapezoid_with_ends(n_intervals: int, order: int):
    """Weights for nodes 0..n on a unit-step grid with corrections at both ends."""
    w = np.ones(n_intervals + 1)
    w[0] = w[-1] = 0.5
    c = gregory_weights(order)
    w[:order] += c
    w[-order:] += c[::-1]
    return w


def _grid_map(grading: str, s):
    """t = g(s), g'(s), g''(s) for the supported gradings."""
    if grading == "uniform":
        return s, np.ones_like(s), np.zeros_like(s)
    if grading == "graded":
        a, k = GRADED_WIDTH, 1 - GRADED_CLUSTER
        th = np.tanh(s / a)
        sech2 = 1 - th**2
        return s - k * a * th, 1 - k * sech2, 2 * k * sech2 * th / a
    raise GridError(f"unknown grading {grading!r}")


def _invert_map(grading: str, t_max: float) -> float:
    if grading == "uniform":
        return t_max
    s = t_max
    for _ in range(100):
        g, dg, _ = _grid_map(grading, np.array(s))
        s = s - (float(g) - t_max) / float(dg)
    return float(s)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes in (0, t_max], quadrature weights and radial density."""

    params: SpaceParams
    t_nodes: np.ndarray
    quad_weights: np.ndarray
    density: np.ndarray
    t_max: float
    grading: str
    s_step: float
    dt_ds: np.ndarray
    d2t_ds2: np.ndarray
    key: tuple

    def __len__(self):
        return len(self.t_nodes)

    @property
    def measure(self) -> np.ndarray:
        """Quadrature weight times density: the discrete radial measure."""
        return self.quad_weights * self.density

    def truncate(self, t_cut: float) -> np.ndarray:
        """Boolean mask of nodes with t <= t_cut."""
        return self.t_nodes <= t_cut * (1 + 1e-12)


def make_radial_grid(
    params: SpaceParams,
    t_max: float = 25.0,
    n_nodes: int = 4096,
    grading: str = "graded",
    lambda_max: float = 20.0,
    order: int = 8,
) -> RadialGrid:
    """Build a radial grid of ``n_nodes`` nodes on (0, t_max].

    Raises GridError for ``t_max <= 1``, fewer than 64 nodes, or fewer than 8
    nodes per period of the fastest mode ``lambda_max``.
    """
    if not t_max > 1:
        raise GridError(f"t_max must exceed 1, got {t_max}")
    if n_nodes < 64:
        raise GridError(f"n_nodes must be at least 64, got {n_nodes}")
    s_max = _invert_map(grading, t_max)
    h = s_max / n_nodes
    s = h * np.arange(1, n_nodes + 1)
    t, dt, d2t = _grid_map(grading, s)
    t[-1] = t_max
    spacing = np.max(np.diff(np.concatenate([[0.0], t])))
    if lambda_max > 0 and spacing > 2 * np.pi / lambda_max / 8:
        raise GridError(
            f"{n_nodes} nodes on (0, {t_max}] give spacing {spacing:.4g}; "
            f"lambda_max={lambda_max} needs at most {2 * np.pi / lambda_max / 8:.4g}"
        )
    w = h * _trapezoid_with_ends(n_nodes, order)[1:] * dt
    key = ("radial", params, float(t_max), int(n_nodes), grading, order)
    return RadialGrid(params, t, w, density(params, t), float(t_max), grading, h, dt, d2t, key)


@dataclass(eq=False)
class RadialFunction:
    """Samples of a radial function on a RadialGrid plus its value at the origin."""

    grid: RadialGrid
    values: np.ndarray
    value_at_origin: complex = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        self.value_at_origin = complex(self.value_at_origin)
        if self.values.shape != self.grid.t_nodes.shape:
            raise ValueError("values length must equal grid length")

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)) and np.isfinite(self.value_at_origin))

    def _combine(self, other, op):
        if isinstance(other, RadialFunction):
            if other.grid is not self.grid:
                raise ValueError("functions live on different grids")
            return RadialFunction(
                self.grid, op(self.values, other.values), op(self.value_at_origin, other.value_at_origin)
            )
        return RadialFunction(self.grid, op(self.values, other), op(self.value_at_origin, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def sup(self) -> float:
        return float(max(np.max(np.abs(self.values)), abs(self.value_at_origin)))

    def map(self, func) -> "RadialFunction":
        """Apply ``func(t, values)`` pointwise; the origin uses t = 0."""
        return RadialFunction(
            self.grid,
            func(self.grid.t_nodes, self.values),
            complex(func(np.zeros(1), np.array([self.value_at_origin]))[0]),
        )


def radial_from_callable(grid: RadialGrid, func) -> RadialFunction:
    """Sample ``func(t)`` on the grid; the origin value is ``func(0)``."""
    return RadialFunction(grid, func(grid.t_nodes), complex(np.asarray(func(np.zeros(1)))[0]))


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Uniform frequency nodes on [0, lambda_max] with Plancherel density |c|^-2."""

    params: SpaceParams
    lambda_nodes: np.ndarray
    quad_weights: np.ndarray
    plancherel: np.ndarray
    lambda_max: float
    key: tuple

    def __len__(self):
        return len(self.lambda_nodes)

    @property
    def step(self) -> float:
        return float(self.lambda_nodes[1] - self.lambda_nodes[0])


def make_spectral_grid(params: SpaceParams, lambda_max: float = 20.0, n_nodes: int = 801) -> SpectralGrid:
    """Uniform nodes 0, d, ..., lambda_max with trapezoid weights.

    The Plancherel density is even and smooth in lambda, so the plain trapezoid
    rule with a node at 0 is spectrally accurate for decaying integrands.
    """
    from .spherical import plancherel_density

    if lambda_max <= 0 or n_nodes < 16:
        raise GridError("need lambda_max > 0 and at least 16 spectral nodes")
    lam = np.linspace(0.0, lambda_max, n_nodes)
    w = np.full(n_nodes, lam[1] - lam[0])
    w[0] = w[-1] = w[0] / 2
    dens = plancherel_density(params, lam)
    key = ("spectral", params, float(lambda_max), int(n_nodes))
    return SpectralGrid(params, lam, w, dens, float(lambda_max), key)


@dataclass(eq=False)
class SpectralFunction:
    """Spherical transform samples, optional point masses, and a log scale.

    The represented object is ``exp(log_scale) * (values on the grid + atoms)``,
    where an atom ``(lam, weight)`` stands for ``weight * phi_lam`` on the
    spatial side.  Atoms carry eigenfunctions (including complex frequencies)
    through the same multiplier pipeline as band-limited functions.
    """

    grid: SpectralGrid
    values: np.ndarray
    atoms: tuple = ()
    log_scale: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.lambda_nodes.shape:
            raise ValueError("values length must equal spectral grid length")
        self.atoms = tuple((complex(l), complex(w)) for l, w in self.atoms)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def scaled_values(self) -> np.ndarray:
        return self.values * np.exp(self.log_scale)


def integrate_radial(f: RadialFunction, check: bool = True, tail_fraction: float = 0.01) -> complex:
    """Sum of weights * density * values over the grid.

    With ``check`` a TailDominatedError is raised if the last node carries more
    than ``tail_fraction`` of the total (relative to the absolute mass when the
    total itself cancels to near zero).
    """
    terms = f.grid.measure * f.values
    total = complex(np.sum(terms))
    if check:
        scale = max(abs(total), 1e-8 * float(np.sum(np.abs(terms))))
        if scale > 0 and abs(terms[-1]) > tail_fraction * scale:
            raise TailDominatedError(
                f"tail node carries {abs(terms[-1]) / scale:.3g} of the integral; increase t_max"
            )
    return total
