"""Backend equivalence: the numba kernels must match the pure-numpy
fallbacks on random inputs, and the env flag must select the fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from afdetect.kernels import _numba, _numpy


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(2024)


def test_lfilter_backends_agree(rng):
    for _ in range(10):
        order = int(rng.integers(1, 6))
        b = rng.normal(size=order + 1)
        a = np.concatenate([[1.0], 0.1 * rng.normal(size=order)])
        x = rng.normal(size=400)
        zi = rng.normal(size=order)
        y_nb, zf_nb = _numba.lfilter(b, a, x, zi)
        y_np, zf_np = _numpy.lfilter(b, a, x, zi)
        np.testing.assert_allclose(y_nb, y_np, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(zf_nb, zf_np, rtol=1e-12, atol=1e-12)


def test_lfilter_pure_gain():
    b = np.array([2.5])
    a = np.array([1.0])
    x = np.arange(5.0)
    for impl in (_numba, _numpy):
        y, _ = impl.lfilter(b, a, x, np.zeros(0))
        np.testing.assert_array_equal(y, 2.5 * x)


def test_dwt_idwt_backends_agree(rng):
    lo = rng.normal(size=8)
    hi = rng.normal(size=8)
    for n in (16, 64, 1000):
        x = rng.normal(size=n)
        a_nb, d_nb = _numba.dwt_periodic(x, lo, hi)
        a_np, d_np = _numpy.dwt_periodic(x, lo, hi)
        np.testing.assert_allclose(a_nb, a_np, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(d_nb, d_np, rtol=1e-12, atol=1e-14)
        r_nb = _numba.idwt_periodic(a_nb, d_nb, lo, hi)
        r_np = _numpy.idwt_periodic(a_nb, d_nb, lo, hi)
        np.testing.assert_allclose(r_nb, r_np, rtol=1e-12, atol=1e-14)


def test_best_split_backends_agree(rng):
    for _ in range(50):
        n = int(rng.integers(2, 40))
        d = int(rng.integers(1, 5))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(np.uint8)
        min_leaf = int(rng.integers(1, 3))
        f_nb, t_nb, s_nb, ok_nb = _numba.best_split(X, y, min_leaf)
        f_np, t_np, s_np, ok_np = _numpy.best_split(X, y, min_leaf)
        assert ok_nb == ok_np
        if ok_nb:
            assert f_nb == f_np
            assert t_nb == pytest.approx(t_np, rel=1e-12)
            assert s_nb == pytest.approx(s_np, rel=1e-12)


def test_knn_votes_backends_agree(rng):
    for _ in range(20):
        n = int(rng.integers(3, 30))
        d = int(rng.integers(1, 6))
        k = int(rng.integers(1, n + 1))
        train = rng.normal(size=(n, d))
        labels = rng.integers(0, 2, size=n).astype(np.uint8)
        queries = rng.normal(size=(7, d))
        v_nb = _numba.knn_af_votes(train, labels, queries, k)
        v_np = _numpy.knn_af_votes(train, labels, queries, k)
        np.testing.assert_allclose(v_nb, v_np, atol=1e-15)


def test_knn_votes_distance_tie_breaks_to_lower_index():
    train = np.array([[1.0], [1.0], [3.0]])
    labels = np.array([1, 0, 0], dtype=np.uint8)
    q = np.array([[1.0]])
    for impl in (_numba, _numpy):
        assert impl.knn_af_votes(train, labels, q, 1)[0] == 1.0


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("", "numba")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ)
    env["AFDETECT_PURE_NUMPY"] = flag
    out = subprocess.run(
        [sys.executable, "-c", "from afdetect import kernels; print(kernels.BACKEND)"],
        capture_output=True, text=True, env=env)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == expected
