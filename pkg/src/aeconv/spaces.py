"""L_p norms, Grand Lebesgue Space norms, and their window functionals.

The natural function of a sequence is psi(p) = sup_n |f_n|_p.  It defines
the GLS norm ||h|| = sup_p |h|_p / psi(p).  The sup over p in (1, R) is taken
over a finite geometric p-grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .criterion import (
    DEFAULT_EPS_FAIL,
    DEFAULT_EPS_PASS,
    DEFAULT_N_GRID,
    ConvergenceVerdict,
    CriticalWindowTable,
    FunctionSequence,
    MCap,
    Mode,
    _ValueCache,
    _check_grid,
    apply_norm,
    verdict,
    verdict_from_profile,
)
from .errors import NumericOverflow, WindowEmpty
from .measure import SamplePopulation, check_finite

P_GRID_POINTS = 32
P_GRID_CAP = 64.0


def _values(h, pop: SamplePopulation) -> np.ndarray:
    v = h(pop.points) if callable(h) else h
    v = np.asarray(v, dtype=np.float64)
    if v.shape == ():
        v = np.full(len(pop), float(v))
    check_finite(v, pop)
    return apply_norm(v)


def _lp(mag: np.ndarray, weights: np.ndarray, p: float) -> float:
    live = weights > 0
    top = float(mag[live].max()) if live.any() else 0.0
    if top == 0.0:
        return 0.0
    if math.isinf(p):
        return top
    s = math.fsum(weights * (mag / top) ** p)
    out = top * s ** (1.0 / p)
    if not math.isfinite(out):
        raise NumericOverflow(f"|h|_{p} overflows")
    return out


def _lp_rows(mags: np.ndarray, weights: np.ndarray, p_grid: np.ndarray) -> np.ndarray:
    """|row|_p for every row of ``mags`` and every p on the grid, shape (rows, len(p_grid))."""
    live = weights > 0
    top = mags[:, live].max(axis=1) if live.any() else np.zeros(mags.shape[0])
    safe = np.where(top > 0, top, 1.0)
    scaled = mags / safe[:, None]
    out = np.empty((mags.shape[0], p_grid.shape[0]))
    for j, p in enumerate(p_grid):
        if math.isinf(p):
            out[:, j] = top
        else:
            out[:, j] = top * ((scaled ** p) @ weights) ** (1.0 / p)
    out[top == 0] = 0.0
    if not np.all(np.isfinite(out)):
        raise NumericOverflow("L_p norms overflow on this sequence")
    return out


def lp_norm(h, pop: SamplePopulation, p: float) -> float:
    """(sum_i w_i |h(x_i)|^p)^(1/p); ``p = inf`` gives the max over weighted points.

    ``h`` is a vectorized callable or an array of values on the population.
    Values are scaled by their max first, so large p does not overflow.
    """
    if not p >= 1:
        raise ValueError(f"need p >= 1, got {p}")
    return _lp(_values(h, pop), pop.weights, float(p))


def default_p_grid(R: float = math.inf, count: int = P_GRID_POINTS) -> np.ndarray:
    if not R > 1:
        raise ValueError(f"R must exceed 1, got {R}")
    p_max = min(R * (1.0 - 2.0 ** -10), P_GRID_CAP)
    p_min = 1.0 + 2.0 ** -10
    if p_max <= p_min:
        p_max = 0.5 * (1.0 + R)
    return np.geomspace(p_min, p_max, count)


@dataclass
class GrandLebesgueSpec:
    p_grid: np.ndarray
    psi: np.ndarray
    R: float = math.inf
    N_max: int | None = None

    def __post_init__(self):
        self.p_grid = np.asarray(self.p_grid, dtype=np.float64)
        self.psi = np.asarray(self.psi, dtype=np.float64)
        if self.p_grid.shape != self.psi.shape or self.p_grid.size == 0:
            raise ValueError("p_grid and psi must be nonempty and of equal length")
        if np.any(np.diff(self.p_grid) <= 0):
            raise ValueError("p_grid must be increasing")
        if np.any(self.p_grid <= 1) or np.any(self.p_grid >= self.R):
            raise ValueError("p_grid must lie inside (1, R)")
        if not (np.all(np.isfinite(self.psi)) and np.all(self.psi > 0)):
            raise ValueError("psi must be positive and finite on the grid")

    def rows(self):
        return [(float(p), float(v)) for p, v in zip(self.p_grid, self.psi)]


def natural_function(seq: FunctionSequence, pop: SamplePopulation, p_grid=None,
                     N_max: int = 128, R: float = math.inf) -> GrandLebesgueSpec:
    """psi(p) = max_{n <= N_max} |f_n|_p on the grid."""
    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    grid = default_p_grid(R) if p_grid is None else np.asarray(p_grid, dtype=np.float64)
    mags = _ValueCache(seq, pop, 1, N_max).magnitudes(1, N_max)
    psi = _lp_rows(mags, pop.weights, grid).max(axis=0)
    return GrandLebesgueSpec(grid, psi, R, N_max)


def gls_norm(h, pop: SamplePopulation, spec: GrandLebesgueSpec) -> float:
    mag = _values(h, pop)
    return max(_lp(mag, pop.weights, p) / s for p, s in zip(spec.p_grid, spec.psi))


def lambda_table(seq: FunctionSequence, pop: SamplePopulation, spec: GrandLebesgueSpec,
                 n_grid=DEFAULT_N_GRID, m_cap="4n") -> CriticalWindowTable:
    """GLS norm of max_{n < k <= m} |f_k| for m up to m_cap(n)."""
    grid = _check_grid(n_grid)
    rule = MCap.parse(m_cap)
    caps = {n: rule(n) for n in grid}
    cache = _ValueCache(seq, pop, grid[0] + 1, max(caps.values()))
    w = np.ascontiguousarray(pop.weights)
    values, ses = {}, {}
    for n in grid:
        mags = np.ascontiguousarray(cache.magnitudes(n + 1, caps[n]))
        norms = kernels.running_lp_norms(mags, w, np.ascontiguousarray(spec.p_grid))
        ratio = (norms / spec.psi[None, :]).max(axis=1)
        values[n] = np.concatenate([[0.0], ratio])  # m = n: empty window
        ses[n] = np.zeros_like(values[n])
    return CriticalWindowTable(Mode.LAMBDA, "gls", grid, caps, values, ses, pop.provenance,
                               pop.summary(), rule.describe(), monotone_in_n=True)


def lambda_window(seq: FunctionSequence, pop: SamplePopulation, spec: GrandLebesgueSpec,
                  n: int, m: int) -> float:
    if m <= n:
        raise WindowEmpty(f"window needs m >= n + 1, got n={n}, m={m}")
    cache = _ValueCache(seq, pop, n + 1, m)
    top = cache.magnitudes(n + 1, m).max(axis=0)
    return gls_norm(top, pop, spec)


def lambda_bar_verdict(seq, pop, spec, n_grid=DEFAULT_N_GRID, m_cap="4n",
                       eps_pass: float = DEFAULT_EPS_PASS,
                       eps_fail: float = DEFAULT_EPS_FAIL) -> tuple[CriticalWindowTable, ConvergenceVerdict]:
    table = lambda_table(seq, pop, spec, n_grid, m_cap)
    return table, verdict(table, eps_pass, eps_fail)


def lp_tail(seq: FunctionSequence, pop: SamplePopulation, p: float, n: int, m: int) -> float:
    """|f_n - f_m|_p."""
    if m <= n:
        raise WindowEmpty(f"need m >= n + 1, got n={n}, m={m}")
    d = seq.values(n, pop.points) - seq.values(m, pop.points)
    return lp_norm(d, pop, p)


@dataclass
class LpTailReport:
    p: float
    sup_profile: dict[int, float]
    pairwise_profile: dict[int, float]
    m_cap: dict[int, int]
    verdict: ConvergenceVerdict
    values: dict[int, list[tuple[int, float]]]  # n -> [(m, |f_n - f_m|_p)]

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "sup_profile": {str(k): v for k, v in self.sup_profile.items()},
            "pairwise_profile": {str(k): v for k, v in self.pairwise_profile.items()},
            "verdict": self.verdict.to_dict(),
        }


def lp_bar_verdict(seq: FunctionSequence, pop: SamplePopulation, p: float, n_grid=DEFAULT_N_GRID,
                   m_cap="4n", eps_pass: float = DEFAULT_EPS_PASS,
                   eps_fail: float = DEFAULT_EPS_FAIL) -> LpTailReport:
    """sup_{n < m <= m_cap} |f_n - f_m|_p per n (explicit max, no monotonicity),
    plus the adjacent-pair profile for comparison.  The verdict uses the sup."""
    grid = _check_grid(n_grid)
    rule = MCap.parse(m_cap)
    caps = {n: rule(n) for n in grid}
    cache = _ValueCache(seq, pop, grid[0], max(caps.values()))
    sup_prof, pair_prof, values = {}, {}, {}
    for n in grid:
        rows = cache.differences(n, caps[n])[1:]
        norms = [_lp(r, pop.weights, float(p)) for r in rows]
        values[n] = list(zip(range(n + 1, caps[n] + 1), norms))
        sup_prof[n] = max(norms)
        pair_prof[n] = norms[0]
    v = verdict_from_profile({n: (s, 0.0) for n, s in sup_prof.items()}, eps_pass, eps_fail,
                             mode=Mode.LP.value, phi=f"L{p:g}", m_cap=caps, population=pop.summary())
    return LpTailReport(float(p), sup_prof, pair_prof, caps, v, values)


def gls_bound_check(seq: FunctionSequence, pop: SamplePopulation, spec: GrandLebesgueSpec) -> float:
    """max over n <= N_max of gls_norm(f_n); at most 1 when psi is the natural function."""
    N_max = spec.N_max or 1
    mags = _ValueCache(seq, pop, 1, N_max).magnitudes(1, N_max)
    return float((_lp_rows(mags, pop.weights, spec.p_grid) / spec.psi[None, :]).max())

