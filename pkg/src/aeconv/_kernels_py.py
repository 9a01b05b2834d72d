"""Pure numpy versions of the routines in ``_kernels.pyx``.

Used when the compiled extension is missing or when ``AECONV_PURE=1``.
Row sums use numpy's pairwise summation, which is deterministic for a fixed
array layout.
"""
from __future__ import annotations

import numpy as np

PHI_ARCTAN, PHI_RATIO1, PHI_RATIO2, PHI_POWER = 0, 1, 2, 3


def _phi(r, code, p):
    if code == PHI_ARCTAN:
        return np.arctan(r)
    if code == PHI_RATIO1:
        return r / (1.0 + r)
    if code == PHI_RATIO2:
        return (r * r) / (1.0 + r * r)
    if code == PHI_POWER:
        return np.power(r, p)
    raise ValueError(f"unknown phi code {code}")


def window_moments(mags, weights, phi_code, phi_param=1.0):
    mags = np.ascontiguousarray(mags, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if weights.shape[0] != mags.shape[1]:
        raise ValueError("weights length does not match point count")
    runmax = np.maximum.accumulate(np.maximum(mags, 0.0), axis=0)
    # overflow shows up as inf in the result; callers turn that into an error
    with np.errstate(over="ignore", invalid="ignore"):
        y = _phi(runmax, phi_code, phi_param)
        first = (y * weights).sum(axis=1)
        second = (y * y * weights).sum(axis=1)
    return first, second


def running_lp_norms(mags, weights, p_grid):
    mags = np.ascontiguousarray(mags, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    p_grid = np.asarray(p_grid, dtype=np.float64)
    runmax = np.maximum.accumulate(np.maximum(mags, 0.0), axis=0)
    out = np.zeros((mags.shape[0], p_grid.shape[0]))
    live = weights > 0.0
    for l, row in enumerate(runmax):
        top = row[live].max() if live.any() else 0.0
        if top == 0.0:
            continue
        scaled = row / top
        for j, p in enumerate(p_grid):
            if np.isinf(p):
                out[l, j] = top
            else:
                out[l, j] = top * ((weights * scaled**p).sum()) ** (1.0 / p)
    return out


def dirichlet(n, x):
    x = np.asarray(x, dtype=np.float64)
    t = x - 2.0 * np.pi * np.floor(x / (2.0 * np.pi) + 0.5)
    h = np.sin(0.5 * t)
    small = np.abs(h) < 1e-8
    safe = np.where(small, 1.0, h)
    out = np.sin((n + 0.5) * t) / (2.0 * np.pi * safe)
    nn = float(n)
    series = (2.0 * nn + 1.0) * (1.0 - nn * (nn + 1.0) * t * t / 6.0) / (2.0 * np.pi)
    return np.where(small, series, out)


def convolve_dirichlet(n, x_eval, nodes, gw):
    x_eval = np.asarray(x_eval, dtype=np.float64)
    nodes = np.asarray(nodes, dtype=np.float64)
    gw = np.asarray(gw, dtype=np.float64)
    out = np.empty(x_eval.shape[0])
    # chunked to bound memory at large node counts
    step = max(1, 2_000_000 // max(1, nodes.shape[0]))
    for start in range(0, x_eval.shape[0], step):
        block = x_eval[start:start + step, None] - nodes[None, :]
        out[start:start + step] = (dirichlet(n, block) * gw).sum(axis=1)
    return out
