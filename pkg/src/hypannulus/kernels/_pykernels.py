"""Pure-NumPy fallback for the compiled series kernels."""

import numpy as np


def power_series(coeffs, x, kmax):
    """Evaluate S_l(x_j) = sum_{k<kmax_j} c_{lk} x_j^k and its x-derivative.

    coeffs : complex (L, K);  x : float (T,);  kmax : int (T,) with kmax <= K.
    Returns two complex (L, T) arrays.
    """
    coeffs = np.ascontiguousarray(coeffs, dtype=complex)
    x = np.asarray(x, dtype=float)
    kmax = np.asarray(kmax, dtype=np.int64)
    L, K = coeffs.shape
    val = np.empty((L, x.size), dtype=complex)
    der = np.empty((L, x.size), dtype=complex)
    kd = coeffs * np.arange(K)
    for km in np.unique(kmax):
        cols = np.nonzero(kmax == km)[0]
        xs = x[cols]
        powers = xs[None, :] ** np.arange(km)[:, None]
        val[:, cols] = coeffs[:, :km] @ powers
        if km > 1:
            der[:, cols] = kd[:, 1:km] @ powers[: km - 1]
        else:
            der[:, cols] = 0.0
    return val, der
