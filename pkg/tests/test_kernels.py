import os
import subprocess
import sys

import numpy as np
import pytest

from cmvlab import _kernels_py, kernels

ck = pytest.importorskip("cmvlab._kernels")

MODES = (kernels.MODE_A, kernels.MODE_M, kernels.MODE_A_INV, kernels.MODE_M_INV)


def alphas(seed, n, r=0.9):
    rng = np.random.default_rng(seed)
    return r * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))


def test_backend_selected():
    if os.environ.get("CMVLAB_PURE", "") not in ("", "0"):
        assert kernels.BACKEND == "python"
        assert kernels.transfer_product is _kernels_py.transfer_product
    else:
        assert kernels.BACKEND == "cython"
        assert kernels.transfer_product is ck.transfer_product


def test_pure_env_forces_fallback():
    code = "import cmvlab.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, CMVLAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("mode", MODES)
def test_products_bitwise_equal(mode):
    a = alphas(mode, 3000)
    for z in (0.7, 1.5 - 0.2j, np.exp(2.1j), -1.0):
        mp, lp = _kernels_py.transfer_product(a, z, mode)
        mc, lc = ck.transfer_product(a, z, mode)
        np.testing.assert_array_equal(mp, mc)
        assert lp == lc


@pytest.mark.parametrize("mode", MODES)
def test_scalar_log_norms_bitwise(mode):
    a = alphas(10 + mode, 2000)
    zs = np.array([0.5, 2.0, np.exp(0.3j), -1.0 + 0.01j])
    np.testing.assert_array_equal(_kernels_py.transfer_log_norms(a, zs, mode), ck.transfer_log_norms(a, zs, mode))


@pytest.mark.parametrize("mode", MODES)
def test_vectorized_log_norms_close(mode):
    # the numpy path rounds differently; per-step agreement is what is comparable
    n = 2000
    a = alphas(20 + mode, n)
    zs = 1.2 * np.exp(2j * np.pi * np.arange(64) / 64)
    lp = _kernels_py.transfer_log_norms(a, zs, mode)
    lc = ck.transfer_log_norms(a, zs, mode)
    assert np.max(np.abs(lp - lc)) / n <= 1e-12


def test_empty_and_errors():
    for impl in (_kernels_py, ck):
        m, ls = impl.transfer_product(np.array([], dtype=complex), 0.5, 0)
        np.testing.assert_array_equal(m, np.eye(2))
        assert ls == 0
        with pytest.raises(ValueError):
            impl.transfer_product(np.array([0.1 + 0j]), 0.5, 7)


def test_rescale_keeps_entries_bounded():
    a = alphas(3, 10**4, 0.99)
    for impl in (_kernels_py, ck):
        m, ls = impl.transfer_product(a, 3.0, 0)
        assert 0.5 <= np.max(np.abs(m)) <= 2 and ls > 100
