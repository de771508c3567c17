import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypannulus import kernels
from hypannulus.kernels import _pykernels


def _case(L, K, T, seed):
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(size=(L, K)) + 1j * rng.normal(size=(L, K))
    x = rng.uniform(0, 0.95, T)
    kmax = rng.integers(1, K + 1, T)
    return coeffs, x, kmax


def test_python_kernel_matches_direct_sum():
    coeffs, x, kmax = _case(3, 20, 15, 0)
    val, der = _pykernels.power_series(coeffs, x, kmax)
    for j in range(x.size):
        k = np.arange(kmax[j])
        assert np.allclose(val[:, j], coeffs[:, : kmax[j]] @ x[j] ** k, rtol=1e-13)
        dk = k[1:]
        assert np.allclose(der[:, j], coeffs[:, 1 : kmax[j]] @ (dk * x[j] ** (dk - 1)), rtol=1e-13)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
@given(st.integers(1, 4), st.integers(1, 60), st.integers(1, 40), st.integers(0, 2**31))
def test_backends_agree(L, K, T, seed):
    from hypannulus.kernels import _ckernels

    coeffs, x, kmax = _case(L, K, T, seed)
    v1, d1 = _pykernels.power_series(coeffs, x, kmax)
    v2, d2 = _ckernels.power_series(coeffs, x, kmax)
    scale = np.sum(np.abs(coeffs)) + 1
    assert np.max(np.abs(v1 - v2)) <= 1e-13 * scale
    assert np.max(np.abs(d1 - d2)) <= 1e-12 * scale * K


def test_pure_python_switch():
    code = "import hypannulus.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, HYPANNULUS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
