"""Compiled and numpy backends must agree."""
from __future__ import annotations

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aeconv import kernels

py = kernels.get_backend("python")
try:
    cy = kernels.get_backend("cython")
except ImportError:  # extension not built
    cy = None

needs_cython = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def _mags(seed, L=30, P=50):
    rng = np.random.default_rng(seed)
    return np.abs(rng.standard_normal((L, P))) * rng.uniform(0.1, 10), rng.dirichlet(np.ones(P))


@pytest.mark.parametrize("code,param", [(0, 1.0), (1, 1.0), (2, 1.0), (3, 2.0), (3, 0.5)])
def test_window_moments_reference(code, param):
    mags, w = _mags(code)
    run = np.maximum.accumulate(mags, axis=0)
    phi = {0: np.arctan, 1: lambda x: x / (1 + x), 2: lambda x: x * x / (1 + x * x),
           3: lambda x: x ** param}[code]
    first, second = py.window_moments(mags, w, code, param)
    np.testing.assert_allclose(first, (phi(run) * w).sum(axis=1), rtol=1e-13)
    np.testing.assert_allclose(second, (phi(run) ** 2 * w).sum(axis=1), rtol=1e-13)


@needs_cython
@pytest.mark.parametrize("code,param", [(0, 1.0), (1, 1.0), (2, 1.0), (3, 3.0)])
def test_window_moments_agree(code, param):
    mags, w = _mags(10 + code, 64, 300)
    a = py.window_moments(mags, w, code, param)
    b = cy.window_moments(mags, w, code, param)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-13, atol=1e-15)


@needs_cython
def test_running_lp_norms_agree():
    mags, w = _mags(3, 20, 100)
    grid = np.array([1.0, 1.5, 2.0, 7.0, 64.0, math.inf])
    np.testing.assert_allclose(py.running_lp_norms(mags, w, grid),
                               cy.running_lp_norms(mags, w, grid), rtol=1e-12)


def test_running_lp_norms_reference():
    mags, w = _mags(4, 5, 40)
    run = np.maximum.accumulate(mags, axis=0)
    out = py.running_lp_norms(mags, w, np.array([2.0, math.inf]))
    np.testing.assert_allclose(out[:, 0], np.sqrt((run ** 2 * w).sum(axis=1)), rtol=1e-13)
    np.testing.assert_allclose(out[:, 1], run.max(axis=1), rtol=0)


@needs_cython
@pytest.mark.parametrize("n", [0, 1, 5, 64])
def test_dirichlet_agree(n):
    x = np.concatenate([np.linspace(-20, 20, 1001), [0.0, 1e-9, -1e-12, 2 * math.pi, 4 * math.pi + 1e-10]])
    np.testing.assert_allclose(py.dirichlet(n, x), cy.dirichlet(n, x), rtol=1e-12, atol=1e-12)


@needs_cython
def test_convolve_agree():
    rng = np.random.default_rng(0)
    nodes = np.sort(rng.uniform(0, 2 * math.pi, 200))
    gw = rng.standard_normal(200) / 200
    x = np.linspace(0, 2 * math.pi, 77)
    np.testing.assert_allclose(py.convolve_dirichlet(9, x, nodes, gw),
                               cy.convolve_dirichlet(9, x, nodes, gw), rtol=1e-11, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
              elements=st.floats(0, 1e6, allow_nan=False)))
def test_window_moments_monotone(mags):
    w = np.full(mags.shape[1], 1.0 / mags.shape[1])
    for backend in filter(None, (py, cy)):
        first, _ = backend.window_moments(np.ascontiguousarray(mags), w, 0, 1.0)
        assert np.all(np.diff(first) >= -1e-12)
        assert np.all(first <= math.pi / 2 + 1e-12)


def _cli_report(tmp_path, env_pure):
    env = dict(os.environ)
    env.pop("AECONV_PURE", None)
    if env_pure:
        env["AECONV_PURE"] = "1"
    out = tmp_path / ("pure" if env_pure else "default")
    subprocess.run([sys.executable, "-m", "aeconv.cli", "analyze", "--input", "power", "--out", str(out)],
                   env=env, check=False, capture_output=True)
    return json.loads((out / "verdict.json").read_text())


def test_pure_fallback_selected_at_import(tmp_path):
    pure = _cli_report(tmp_path, True)
    default = _cli_report(tmp_path, False)
    assert pure["backend"] == "python"
    assert default["backend"] == ("cython" if cy is not None else "python")
    assert pure["verdict"] == default["verdict"]
    for n, v in default["tail_profile"].items():
        assert pure["tail_profile"][n] == pytest.approx(v, rel=1e-13)
