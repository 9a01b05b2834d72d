# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every routine here has a numpy twin in ``_kernels_py``; both must return the
same numbers up to rounding.  Summation order is fixed (point index ascending)
and compensated, so results do not depend on how callers split the work.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport atan, sin, pow, exp, log, fabs, floor, M_PI, INFINITY

cnp.import_array()

cdef enum:
    PHI_ARCTAN = 0
    PHI_RATIO1 = 1
    PHI_RATIO2 = 2
    PHI_POWER = 3

cdef inline double _phi(double r, int code, double p) noexcept nogil:
    if code == PHI_ARCTAN:
        return atan(r)
    elif code == PHI_RATIO1:
        return r / (1.0 + r)
    elif code == PHI_RATIO2:
        return (r * r) / (1.0 + r * r)
    elif p == 2.0:
        return r * r
    elif p == 1.0:
        return r
    else:
        return pow(r, p)


def window_moments(const double[:, ::1] mags, const double[::1] weights,
                   int phi_code, double phi_param=1.0):
    """Weighted first and second moments of phi(running max) for each row."""
    cdef Py_ssize_t L = mags.shape[0], P = mags.shape[1]
    cdef Py_ssize_t l, i
    cdef double r, y, t, s1, c1, s2, c2, w
    if weights.shape[0] != P:
        raise ValueError("weights length does not match point count")
    if phi_code < 0 or phi_code > PHI_POWER:
        raise ValueError(f"unknown phi code {phi_code}")
    first = np.empty(L, dtype=np.float64)
    second = np.empty(L, dtype=np.float64)
    runmax = np.zeros(P, dtype=np.float64)
    cdef double[::1] f = first
    cdef double[::1] g = second
    cdef double[::1] rm = runmax
    with nogil:
        for l in range(L):
            s1 = 0.0; c1 = 0.0; s2 = 0.0; c2 = 0.0
            for i in range(P):
                r = mags[l, i]
                if r > rm[i]:
                    rm[i] = r
                w = weights[i]
                y = _phi(rm[i], phi_code, phi_param)
                # Neumaier compensated accumulation
                r = w * y
                t = s1 + r
                if fabs(s1) >= fabs(r):
                    c1 += (s1 - t) + r
                else:
                    c1 += (r - t) + s1
                s1 = t
                r = w * y * y
                t = s2 + r
                if fabs(s2) >= fabs(r):
                    c2 += (s2 - t) + r
                else:
                    c2 += (r - t) + s2
                s2 = t
            f[l] = s1 + c1
            g[l] = s2 + c2
    return first, second


def running_lp_norms(const double[:, ::1] mags, const double[::1] weights,
                     const double[::1] p_grid):
    """L_p norms of the running max of each row, one column per p.

    Values are scaled by the row max, and |v|^p is taken as exp(p log v) from a
    per-row log buffer.  Columns (p values) run in parallel; each keeps its own
    fixed summation order, so the result does not depend on the thread count.
    """
    cdef Py_ssize_t L = mags.shape[0], P = mags.shape[1], NP = p_grid.shape[0]
    cdef Py_ssize_t l, i, j
    cdef double top, p, s, c, t, r
    if weights.shape[0] != P:
        raise ValueError("weights length does not match point count")
    out = np.empty((L, NP), dtype=np.float64)
    runmax = np.zeros(P, dtype=np.float64)
    logs = np.empty(P, dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] rm = runmax
    cdef double[::1] lg = logs
    with nogil:
        for l in range(L):
            top = 0.0
            for i in range(P):
                if mags[l, i] > rm[i]:
                    rm[i] = mags[l, i]
                if weights[i] > 0.0 and rm[i] > top:
                    top = rm[i]
            if top == 0.0:
                for j in range(NP):
                    o[l, j] = 0.0
                continue
            for i in range(P):
                lg[i] = log(rm[i] / top) if rm[i] > 0.0 else -INFINITY
            for j in prange(NP, schedule="static"):
                p = p_grid[j]
                if p == INFINITY:
                    o[l, j] = top
                    continue
                s = 0.0
                c = 0.0
                for i in range(P):
                    r = weights[i] * exp(p * lg[i])
                    t = s + r
                    if fabs(s) >= fabs(r):
                        c = c + ((s - t) + r)
                    else:
                        c = c + ((r - t) + s)
                    s = t
                o[l, j] = top * pow(s + c, 1.0 / p)
    return out


cdef inline double _dirichlet(long n, double x) noexcept nogil:
    cdef double t = x - 2.0 * M_PI * floor(x / (2.0 * M_PI) + 0.5)
    cdef double h = sin(0.5 * t)
    cdef double nn
    if fabs(h) < 1e-8:
        nn = <double>n
        return (2.0 * nn + 1.0) * (1.0 - nn * (nn + 1.0) * t * t / 6.0) / (2.0 * M_PI)
    return sin((n + 0.5) * t) / (2.0 * M_PI * h)


def dirichlet(long n, const double[::1] x):
    cdef Py_ssize_t i, N = x.shape[0]
    out = np.empty(N, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in prange(N, schedule="static"):
            o[i] = _dirichlet(n, x[i])
    return out


def convolve_dirichlet(long n, const double[::1] x_eval, const double[::1] nodes,
                       const double[::1] gw):
    """out[j] = sum_i gw[i] * D_n(x_eval[j] - nodes[i])."""
    cdef Py_ssize_t j, i, NE = x_eval.shape[0], NQ = nodes.shape[0]
    cdef double s, c, t, r
    out = np.empty(NE, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for j in prange(NE, schedule="static"):
            s = 0.0
            c = 0.0
            for i in range(NQ):
                r = gw[i] * _dirichlet(n, x_eval[j] - nodes[i])
                t = s + r
                if fabs(s) >= fabs(r):
                    c = c + ((s - t) + r)
                else:
                    c = c + ((r - t) + s)
                s = t
            o[j] = s + c
    return out
