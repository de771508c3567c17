"""Fourth-order finite differences on the mapped radial grid.

Derivatives are taken in the uniform variable s and converted with the chain
rule.  Near the origin the samples are continued to negative s by a caller
supplied mirror (even extension for radial functions, the theta + pi column
for polar functions); at t_max one-sided stencils are used.
"""

from functools import lru_cache

import numpy as np

HALF = 2  # central stencil half-width
ONE_SIDED = 7  # points in the one-sided end stencil


@lru_cache(maxsize=None)
def fd_weights(offsets: tuple, deriv: int) -> np.ndarray:
    """Weights w with sum_j w_j f(x + o_j h) ~ h^deriv f^(deriv)(x)."""
    o = np.asarray(offsets, dtype=float)
    n = o.size
    V = np.vander(o, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[deriv] = np.prod(np.arange(1, deriv + 1))
    return np.linalg.solve(V, rhs)


def s_derivatives(values, origin, mirror, h):
    """First and second s-derivatives of samples at s = h, 2h, ..., n h.

    ``values`` has the grid along its last axis; ``mirror`` gives the samples
    at s = -h, -2h, ... (same shape) and ``origin`` the value at s = 0.
    """
    values = np.asarray(values)
    n = values.shape[-1]
    lead = values.shape[:-1]
    origin = np.broadcast_to(np.asarray(origin, dtype=values.dtype), lead)
    ext = np.concatenate([mirror[..., :HALF][..., ::-1], origin[..., None], values], axis=-1)
    c1 = fd_weights(tuple(range(-HALF, HALF + 1)), 1)
    c2 = fd_weights(tuple(range(-HALF, HALF + 1)), 2)
    d1 = np.zeros_like(values, dtype=np.result_type(values, float))
    d2 = np.zeros_like(d1)
    m = n - HALF  # interior nodes 0..m-1 have a full central stencil
    for j, o in enumerate(range(-HALF, HALF + 1)):
        sl = ext[..., HALF + 1 + o : HALF + 1 + o + m]
        d1[..., :m] += c1[j] * sl
        d2[..., :m] += c2[j] * sl
    for i in range(m, n):
        offs = tuple(range(-(ONE_SIDED - (n - i)), n - i))
        w1 = fd_weights(offs, 1)
        w2 = fd_weights(offs, 2)
        block = values[..., i + offs[0] : i + offs[-1] + 1]
        d1[..., i] = block @ w1
        d2[..., i] = block @ w2
    return d1 / h, d2 / h**2


def t_derivatives(grid, values, origin, mirror):
    """f_t and f_tt on the grid nodes via the chain rule t = g(s)."""
    d1, d2 = s_derivatives(values, origin, mirror, grid.s_step)
    ft = d1 / grid.dt_ds
    ftt = (d2 - ft * grid.d2t_ds2) / grid.dt_ds**2
    return ft, ftt
