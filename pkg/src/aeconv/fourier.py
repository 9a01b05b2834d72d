"""Fourier partial sums and the theta window functional.

Partial sums are available two ways: by quadrature of the convolution with
the Dirichlet kernel, and from quadrature Fourier coefficients.  The two
paths share no code beyond the node set, so each checks the other.

theta(n, m) = integral of arctan( max_{n < k <= m} |s_k(x) - s_n(x)| ) dx/(2 pi)

is the Cauchy window functional of the partial-sum sequence; its vanishing
tail decides a.e. convergence of the Fourier series.
"""
from __future__ import annotations

import csv
import enum
import math
import threading
import weakref
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .criterion import (
    DEFAULT_EPS_FAIL,
    DEFAULT_EPS_PASS,
    ConvergenceVerdict,
    CriticalWindowTable,
    FunctionSequence,
    MCap,
    Mode,
    gamma_table,
    verdict,
)
from .errors import BadDegrees, WindowEmpty
from .measure import IntegralEstimate, SamplePopulation, check_finite, integrate, rule_nodes

TWO_PI = 2.0 * math.pi
SINGULAR_TOL = 1e-8


class Smoothness(str, enum.Enum):
    TRIG_POLY = "trig_poly"
    PIECEWISE = "piecewise"
    GENERIC = "generic"


class Method(str, enum.Enum):
    CONVOLUTION = "conv"
    COEFFICIENTS = "coef"


class LnPlus(str, enum.Enum):
    PRINTED = "printed"            # max(e, ln z)
    CONVENTIONAL = "conventional"  # ln(max(e, z))


@dataclass(eq=False)
class PeriodicFunction:
    """A 2*pi-periodic function given on [0, 2*pi).

    ``breakpoints`` lists jump locations; quadrature then integrates each
    smooth piece separately.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    smoothness: Smoothness = Smoothness.GENERIC
    name: str = "g"
    degree: int | None = None
    breakpoints: tuple[float, ...] = ()

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.asarray(self.evaluator(np.mod(x, TWO_PI)), dtype=np.float64)


def periodic_from_csv(path, name: str | None = None) -> PeriodicFunction:
    """Periodic linear interpolant through ``x,value`` samples on [0, 2*pi)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header[:2] != ["x", "value"]:
            raise ValueError(f"{path}: expected header 'x,value'")
        rows = np.array([[float(a), float(b)] for a, b, *_ in reader if a], dtype=np.float64)
    order = np.argsort(rows[:, 0])
    xs, ys = rows[order, 0], rows[order, 1]
    if xs[0] < 0 or xs[-1] >= TWO_PI:
        raise ValueError(f"{path}: abscissae must lie in [0, 2*pi)")
    return PeriodicFunction(lambda x: np.interp(x, xs, ys, period=TWO_PI),
                            Smoothness.GENERIC, name or str(path))


# ---------------------------------------------------------------------------
# kernels


def dirichlet_kernel(n: int, x):
    """sin((n + 1/2) x) / (2 pi sin(x/2)), continuous through x in 2 pi Z."""
    if n < 0:
        raise BadDegrees(f"degree must be >= 0, got {n}")
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = kernels.dirichlet(int(n), np.ascontiguousarray(arr.ravel())).reshape(arr.shape)
    return float(out[0]) if np.ndim(x) == 0 else out


def difference_kernel(m: int, n: int, x):
    """D_m - D_n in closed form: sin((m-n)x/2) cos((m+n+1)x/2) / (pi sin(x/2))."""
    if n < 0 or m < n + 1:
        raise BadDegrees(f"need m >= n + 1 and n >= 0, got m={m}, n={n}")
    xa = np.asarray(x, dtype=np.float64)
    t = xa - TWO_PI * np.floor(xa / TWO_PI + 0.5)
    h = np.sin(0.5 * t)
    small = np.abs(h) < SINGULAR_TOL
    safe = np.where(small, 1.0, h)
    closed = np.sin(0.5 * (m - n) * t) * np.cos(0.5 * (m + n + 1) * t) / (math.pi * safe)
    tt = t * t
    series = ((2 * m + 1) * (1.0 - m * (m + 1) * tt / 6.0)
              - (2 * n + 1) * (1.0 - n * (n + 1) * tt / 6.0)) / TWO_PI
    out = np.where(small, series, closed)
    return float(out) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# quadrature and coefficients


def quadrature_nodes(g: PeriodicFunction, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on [0, 2 pi) with weights summing to 2 pi (plain dx)."""
    count = max(int(count), 16)
    if not g.breakpoints:
        return rule_nodes(0.0, TWO_PI, count, "midpoint")
    edges = np.unique(np.concatenate([[0.0, TWO_PI], np.mod(g.breakpoints, TWO_PI)]))
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(16, int(math.ceil(count * (b - a) / TWO_PI)))
        x, w = rule_nodes(a, b, k, "gauss-legendre")
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _node_count(degree: int) -> int:
    return max(8 * (degree + 1), 64)


_coef_cache: "weakref.WeakKeyDictionary[PeriodicFunction, dict]" = weakref.WeakKeyDictionary()
_coef_lock = threading.Lock()


def fourier_coefficients(g: PeriodicFunction, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """(a_0..a_K, b_0..b_K) by quadrature; cached per (g, K)."""
    with _coef_lock:
        hit = _coef_cache.get(g, {}).get(degree)
    if hit is not None:
        return hit
    y, w = quadrature_nodes(g, _node_count(degree))
    gy = g(y)
    if not np.all(np.isfinite(gy)):
        raise ValueError(f"{g.name} is not finite at a quadrature node")
    k = np.arange(degree + 1)[:, None]
    ky = k * y[None, :]
    a = (np.cos(ky) * (w * gy)).sum(axis=1) / math.pi
    b = (np.sin(ky) * (w * gy)).sum(axis=1) / math.pi
    b[0] = 0.0
    a.setflags(write=False)
    b.setflags(write=False)
    with _coef_lock:
        _coef_cache.setdefault(g, {})[degree] = (a, b)
    return a, b


def partial_sums_matrix(g: PeriodicFunction, max_degree: int, x: np.ndarray,
                        lo: int = 0, hi: int | None = None) -> np.ndarray:
    """Rows s_lo(x) .. s_hi(x) from the coefficients of degree ``max_degree``."""
    hi = max_degree if hi is None else hi
    a, b = fourier_coefficients(g, max_degree)
    x = np.asarray(x, dtype=np.float64)
    k = np.arange(1, hi + 1)[:, None]
    terms = a[1:hi + 1, None] * np.cos(k * x[None, :]) + b[1:hi + 1, None] * np.sin(k * x[None, :])
    sums = np.empty((hi + 1, x.shape[0]))
    sums[0] = 0.5 * a[0]
    np.cumsum(terms, axis=0, out=sums[1:])
    sums[1:] += 0.5 * a[0]
    return sums[lo:]


def partial_sum(g: PeriodicFunction, n: int, x, method: Method | str = Method.CONVOLUTION):
    """n-th Fourier partial sum of g at x."""
    if n < 0:
        raise BadDegrees(f"degree must be >= 0, got {n}")
    method = Method(method)
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
    if method is Method.CONVOLUTION:
        y, w = quadrature_nodes(g, _node_count(n))
        gw = np.ascontiguousarray(w * g(y))
        out = kernels.convolve_dirichlet(int(n), np.ascontiguousarray(xa), np.ascontiguousarray(y), gw)
    else:
        out = partial_sums_matrix(g, n, xa, lo=n)[0]
    return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))


def partial_sum_sequence(g: PeriodicFunction, max_degree: int) -> FunctionSequence:
    """s_0, s_1, ..., s_max_degree as a FunctionSequence (coefficient path)."""

    def one(n, pts):
        return partial_sums_matrix(g, max_degree, pts, lo=n, hi=n)[0]

    def block(lo, hi, pts):
        return partial_sums_matrix(g, max_degree, pts, lo=lo, hi=hi)

    return FunctionSequence(one, name=f"partial sums of {g.name}", limit=None, batch_evaluator=block)


# ---------------------------------------------------------------------------
# functionals


def ln_plus(z, variant: LnPlus | str = LnPlus.PRINTED):
    z = np.asarray(z, dtype=np.float64)
    with np.errstate(divide="ignore"):
        if LnPlus(variant) is LnPlus.PRINTED:
            return np.maximum(math.e, np.log(z))
        return np.log(np.maximum(math.e, z))


def antonov_functional(g: PeriodicFunction, pop: SamplePopulation,
                       variant: LnPlus | str = LnPlus.PRINTED) -> IntegralEstimate:
    """Integral over [0, 2 pi] (plain dx) of |g| ln+|g| ln+ ln+ ln+ |g|."""
    variant = LnPlus(variant)

    def integrand(x):
        a = np.abs(g(x))
        return a * ln_plus(a, variant) * ln_plus(ln_plus(ln_plus(a, variant), variant), variant)

    est = integrate(integrand, pop)
    return IntegralEstimate(TWO_PI * est.value, TWO_PI * est.standard_error, est.node_count)


def theta_table(g: PeriodicFunction, pop: SamplePopulation, n_grid=(4, 8, 16, 32, 64, 128),
                m_cap="4n", workers: int = 1) -> CriticalWindowTable:
    rule = MCap.parse(m_cap)
    top = max(rule(n) for n in n_grid)
    seq = partial_sum_sequence(g, top)
    return gamma_table(seq, pop, None, n_grid, rule, workers, mode=Mode.THETA)


def theta_window(g: PeriodicFunction, pop: SamplePopulation, n: int, m: int) -> IntegralEstimate:
    if m <= n:
        raise WindowEmpty(f"window needs m >= n + 1, got n={n}, m={m}")
    S = partial_sums_matrix(g, m, pop.points, lo=n)
    check_finite(S.T, pop, what="partial sums")
    d = np.abs(S - S[0][None]).max(axis=0)
    return integrate(lambda _x: np.arctan(d), pop)


def theta_verdict(g: PeriodicFunction, pop: SamplePopulation, n_grid=(4, 8, 16, 32, 64, 128),
                  m_cap="4n", eps_pass: float = DEFAULT_EPS_PASS, eps_fail: float = DEFAULT_EPS_FAIL,
                  workers: int = 1) -> tuple[CriticalWindowTable, ConvergenceVerdict]:
    table = theta_table(g, pop, n_grid, m_cap, workers)
    return table, verdict(table, eps_pass, eps_fail)


def theta_constant_integrand(g: PeriodicFunction, pop: SamplePopulation, n: int, m: int) -> float:
    """Max over x taken before integrating, so the integrand is a constant."""
    S = partial_sums_matrix(g, m, pop.points, lo=n)
    return math.atan(float(np.abs(S - S[0][None]).max()))


def method_agreement(g: PeriodicFunction, degrees: Sequence[int], x: np.ndarray) -> float:
    """Largest |convolution - coefficient| gap over the given degrees and points."""
    gap = 0.0
    for n in degrees:
        conv = partial_sum(g, n, x, Method.CONVOLUTION)
        coef = partial_sum(g, n, x, Method.COEFFICIENTS)
        gap = max(gap, float(np.max(np.abs(conv - coef))))
    return gap
