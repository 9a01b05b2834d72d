"""Critical window functionals and convergence verdicts.

For a sequence f_k on a probability population the window functional is

    kappa(n, m) = integral of phi( max_{n <= k <= m} |f_k(x)| ) dnu(x)

and the sequence converges almost everywhere exactly when
``lim_n sup_m kappa(n, m) = 0``.  Because the windowed max only grows with m,
the sup over a finite window is the value at its right end ``m_cap(n)``; only
the limit in n has to be judged from a finite grid, which is what
:func:`verdict` does.

The Cauchy variants (``GAMMA`` for scalars, ``TAU`` for vectors, ``THETA`` for
Fourier partial sums) measure ``|f_k - f_n|`` instead of ``|f_k|`` and decide
whether a limit exists at all.
"""
from __future__ import annotations

import enum
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import BadThresholds, NumericOverflow, WindowEmpty
from .measure import IntegralEstimate, Provenance, SamplePopulation, check_finite, integrate
from .trial import TrialFunction, arctan_phi

DEFAULT_N_GRID = (4, 8, 16, 32, 64, 128)
DEFAULT_EPS_PASS = 0.01
DEFAULT_EPS_FAIL = 0.2
PLATEAU_REL = 0.10
QUAD_SLACK = 1e-12
SE_MARGIN = 3.0


class Norm(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    SUP = "sup"
    ONE = "one"


class Mode(str, enum.Enum):
    KAPPA = "kappa"
    GAMMA = "gamma"
    TAU = "tau"
    THETA = "theta"
    LAMBDA = "lambda"
    LP = "lp"
    IN_PROB = "in-prob"
    MOMENT = "moment"


class Verdict(str, enum.Enum):
    CONVERGES = "CONVERGES"
    DIVERGES = "DIVERGES"
    INCONCLUSIVE = "INCONCLUSIVE"


def apply_norm(values: np.ndarray, norm: Norm = Norm.EUCLIDEAN, vector: bool | None = None) -> np.ndarray:
    """Pointwise magnitude: absolute value for scalars, the chosen norm on the last axis for vectors.

    ``vector=None`` infers vector values from a 2-d input.
    """
    v = np.asarray(values, dtype=np.float64)
    if vector is None:
        vector = v.ndim == 2
    if not vector:
        return np.abs(v)
    norm = Norm(norm)
    if norm is Norm.EUCLIDEAN:
        return np.sqrt(np.sum(v * v, axis=-1))
    if norm is Norm.SUP:
        return np.max(np.abs(v), axis=-1)
    return np.sum(np.abs(v), axis=-1)


@dataclass(eq=False)
class FunctionSequence:
    """Indexed family f_1, f_2, ... evaluated on arrays of points.

    ``evaluator(n, points)`` returns shape ``(P,)`` for scalar values or
    ``(P, d)`` for vectors.  ``batch_evaluator(lo, hi, points)``, if given,
    returns all indices lo..hi at once with a leading index axis.  A
    ``limit`` is subtracted before any analysis.
    """

    evaluator: Callable[[int, np.ndarray], np.ndarray]
    value_dim: int = 1
    norm: Norm = Norm.EUCLIDEAN
    limit: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "sequence"
    batch_evaluator: Callable[[int, int, np.ndarray], np.ndarray] | None = None

    def values(self, n: int, points: np.ndarray) -> np.ndarray:
        v = np.asarray(self.evaluator(n, points), dtype=np.float64)
        if v.shape == ():
            v = np.full(points.shape[0], float(v))
        if self.limit is not None:
            v = v - np.asarray(self.limit(points), dtype=np.float64)
        return v

    def value_block(self, lo: int, hi: int, points: np.ndarray) -> np.ndarray:
        """Values for indices lo..hi inclusive, stacked along axis 0."""
        if self.batch_evaluator is not None:
            block = np.asarray(self.batch_evaluator(lo, hi, points), dtype=np.float64)
            if self.limit is not None:
                block = block - np.asarray(self.limit(points), dtype=np.float64)[None]
            return block
        return np.stack([self.values(k, points) for k in range(lo, hi + 1)])

    def magnitude(self, n: int, points: np.ndarray) -> np.ndarray:
        return apply_norm(self.values(n, points), self.norm, self.value_dim > 1)

    def __add__(self, other: "FunctionSequence") -> "FunctionSequence":
        return linear_combination([(1.0, self), (1.0, other)])


def linear_combination(terms: Sequence[tuple[float, FunctionSequence]],
                       name: str | None = None) -> FunctionSequence:
    """The sequence sum_i c_i * F_i (limits combine the same way)."""
    terms = list(terms)

    def ev(n, pts):
        return sum(c * F.values(n, pts) for c, F in terms)

    label = name or " + ".join(f"{c:g}*{F.name}" for c, F in terms)
    return FunctionSequence(ev, terms[0][1].value_dim, terms[0][1].norm, None, label)


@dataclass(frozen=True)
class MCap:
    """Window cap rule m_cap(n) = scale*n + offset, or a custom callable."""

    scale: int = 4
    offset: int = 0
    func: Callable[[int], int] | None = field(default=None, compare=False)
    label: str = ""

    def __call__(self, n: int) -> int:
        m = self.func(n) if self.func is not None else self.scale * n + self.offset
        return max(int(m), n + 1)

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.offset == 0:
            return f"{self.scale}n"
        sign = "+" if self.offset > 0 else "-"
        head = "n" if self.scale == 1 else f"{self.scale}n"
        return f"{head}{sign}{abs(self.offset)}"

    @classmethod
    def parse(cls, text: str | int | "MCap") -> "MCap":
        if isinstance(text, MCap):
            return text
        s = str(text).replace(" ", "")
        m = re.fullmatch(r"(\d*)n([+-]\d+)?", s)
        if m:
            scale = int(m.group(1)) if m.group(1) else 1
            offset = int(m.group(2)) if m.group(2) else 0
            return cls(scale, offset)
        raise ValueError(f"cannot parse m_cap rule {text!r}; expected e.g. '4n' or 'n+1'")


@dataclass
class CriticalWindowTable:
    """Window values for each probed n and m = n..m_cap(n).

    ``values[n][j]`` is the functional for the window ending at m = n + j;
    the ``j = 0`` entry (empty or single-index window) is kept for the
    truncation diagnostics but is not a table cell.
    """

    mode: Mode
    phi: str
    n_grid: tuple[int, ...]
    m_cap: dict[int, int]
    values: dict[int, np.ndarray]
    standard_errors: dict[int, np.ndarray]
    provenance: Provenance = Provenance.QUADRATURE
    population: str = ""
    m_rule: str = ""
    monotone_in_n: bool = True

    def cell(self, n: int, m: int) -> float:
        if m <= n or m > self.m_cap[n]:
            raise KeyError((n, m))
        return float(self.values[n][m - n])

    def cells(self) -> Iterable[tuple[int, int, float, float]]:
        for n in self.n_grid:
            v, se = self.values[n], self.standard_errors[n]
            for j in range(1, v.shape[0]):
                yield n, n + j, float(v[j]), float(se[j])

    def tail_profile(self) -> dict[int, tuple[float, float]]:
        return tail_sup_profile(self)

    def rising_at_cap(self, rel: float = PLATEAU_REL) -> dict[int, bool]:
        """Whether the windowed value still grows over the second half of the window."""
        out = {}
        for n in self.n_grid:
            v, se = self.values[n], self.standard_errors[n]
            mid = (v.shape[0] - 1) // 2
            margin = max(QUAD_SLACK, SE_MARGIN * math.hypot(se[-1], se[mid]))
            out[n] = bool(v[-1] > v[mid] * (1.0 + rel) + margin)
        return out

    def monotonicity_violations(self, slack: float | None = None) -> list[str]:
        """Cells breaking growth in m (always) or shrinkage in n (kappa-type tables)."""
        bad = []
        for n in self.n_grid:
            v, se = self.values[n], self.standard_errors[n]
            tol = slack if slack is not None else QUAD_SLACK
            d = np.diff(v[1:])
            allow = tol + SE_MARGIN * np.hypot(se[2:], se[1:-1])
            for j in np.flatnonzero(d < -allow):
                bad.append(f"m-monotonicity at n={n}, m={n + 2 + j}: drop {-d[j]:.3e}")
        if self.monotone_in_n:
            grid = list(self.n_grid)
            for a, b in zip(grid[:-1], grid[1:]):
                top = min(self.m_cap[a], self.m_cap[b])
                for m in range(b + 1, top + 1):
                    va, vb = self.values[a][m - a], self.values[b][m - b]
                    sa, sb = self.standard_errors[a][m - a], self.standard_errors[b][m - b]
                    tol = (slack if slack is not None else QUAD_SLACK) + SE_MARGIN * math.hypot(sa, sb)
                    if vb > va + tol:
                        bad.append(f"n-monotonicity at m={m}: n={b} exceeds n={a} by {vb - va:.3e}")
        return bad


@dataclass
class ConvergenceVerdict:
    verdict: Verdict
    mode: str
    phi: str
    n_grid: list[int]
    m_cap: dict[int, int]
    tail_profile: dict[int, float]
    standard_errors: dict[int, float]
    thresholds: tuple[float, float]
    caveat: str
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "phi": self.phi,
            "n_grid": list(self.n_grid),
            "m_cap": {str(k): v for k, v in self.m_cap.items()},
            "tail_profile": {str(k): v for k, v in self.tail_profile.items()},
            "standard_errors": {str(k): v for k, v in self.standard_errors.items()},
            "verdict": self.verdict.value,
            "thresholds": {"eps_pass": self.thresholds[0], "eps_fail": self.thresholds[1]},
            "caveat": self.caveat,
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# table construction


class _ValueCache:
    """Sequence values on the population for a contiguous index range."""

    def __init__(self, seq: FunctionSequence, pop: SamplePopulation, lo: int, hi: int):
        self.lo = lo
        block = seq.value_block(lo, hi, pop.points)
        check_finite(np.moveaxis(block, 1, 0).reshape(block.shape[1], -1), pop, what=f"sequence {seq.name}")
        self.block = block
        self.norm = seq.norm
        self.vector = seq.value_dim > 1

    def magnitudes(self, lo: int, hi: int) -> np.ndarray:
        return apply_norm(self.block[lo - self.lo:hi - self.lo + 1], self.norm, self.vector)

    def differences(self, base: int, hi: int) -> np.ndarray:
        b = self.block
        rows = b[base - self.lo:hi - self.lo + 1] - b[base - self.lo][None]
        return apply_norm(rows, self.norm, self.vector)


def _phi_row(mags: np.ndarray, pop: SamplePopulation, phi: TrialFunction) -> tuple[np.ndarray, np.ndarray]:
    mags = np.ascontiguousarray(mags, dtype=np.float64)
    w = np.ascontiguousarray(pop.weights)
    if phi.kernel_code is not None:
        first, second = kernels.window_moments(mags, w, phi.kernel_code, phi.param)
    else:
        y = np.asarray(phi(np.maximum.accumulate(mags, axis=0)), dtype=np.float64)
        first, second = (y * w).sum(axis=1), (y * y * w).sum(axis=1)
    if not (np.all(np.isfinite(first)) and np.all(np.isfinite(second))):
        raise NumericOverflow(f"phi={phi.name} overflows on this window")
    if pop.provenance is Provenance.MONTE_CARLO:
        N = len(pop)
        var = np.maximum(second - first * first, 0.0) * (N / (N - 1))
        se = np.sqrt(var / N)
    else:
        se = np.zeros_like(first)
    return first, se


def _check_grid(n_grid: Sequence[int]) -> tuple[int, ...]:
    grid = tuple(int(n) for n in n_grid)
    if not grid or any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid[:-1], grid[1:])):
        raise ValueError(f"n_grid must be increasing positive indices, got {list(n_grid)}")
    return grid


def _build_table(mode: Mode, seq: FunctionSequence, pop: SamplePopulation, phi: TrialFunction,
                 n_grid, m_cap, workers: int, cauchy: bool) -> CriticalWindowTable:
    grid = _check_grid(n_grid)
    rule = MCap.parse(m_cap)
    caps = {n: rule(n) for n in grid}
    cache = _ValueCache(seq, pop, grid[0], max(caps.values()))

    def row(n):
        mags = cache.differences(n, caps[n]) if cauchy else cache.magnitudes(n, caps[n])
        return _phi_row(mags, pop, phi)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(row, grid))
    else:
        rows = [row(n) for n in grid]
    return CriticalWindowTable(
        mode, phi.name, grid, caps,
        {n: r[0] for n, r in zip(grid, rows)},
        {n: r[1] for n, r in zip(grid, rows)},
        pop.provenance, pop.summary(), rule.describe(),
        monotone_in_n=not cauchy,
    )


def kappa_table(seq: FunctionSequence, pop: SamplePopulation, phi: TrialFunction | None = None,
                n_grid=DEFAULT_N_GRID, m_cap="4n", workers: int = 1) -> CriticalWindowTable:
    """kappa(n, m) for n in the grid and m up to ``m_cap(n)``."""
    return _build_table(Mode.KAPPA, seq, pop, phi or arctan_phi(), n_grid, m_cap, workers, cauchy=False)


def gamma_table(seq: FunctionSequence, pop: SamplePopulation, phi: TrialFunction | None = None,
                n_grid=DEFAULT_N_GRID, m_cap="4n", workers: int = 1,
                mode: Mode = Mode.GAMMA) -> CriticalWindowTable:
    """Cauchy windows E phi(max_{n<=k<=m} |f_k - f_n|)."""
    return _build_table(Mode(mode), seq, pop, phi or arctan_phi(), n_grid, m_cap, workers, cauchy=True)


def tau_table(seq: FunctionSequence, pop: SamplePopulation, phi: TrialFunction | None = None,
              n_grid=DEFAULT_N_GRID, m_cap="4n", workers: int = 1) -> CriticalWindowTable:
    """Vector-valued Cauchy windows under the sequence's norm."""
    if seq.value_dim < 2:
        raise ValueError("tau windows need vector-valued sequences (value_dim >= 2)")
    return gamma_table(seq, pop, phi, n_grid, m_cap, workers, mode=Mode.TAU)


def _single_window(seq, pop, phi, n, m, cauchy) -> IntegralEstimate:
    if m <= n:
        raise WindowEmpty(f"window needs m >= n + 1, got n={n}, m={m}")
    cache = _ValueCache(seq, pop, n, m)
    mags = cache.differences(n, m) if cauchy else cache.magnitudes(n, m)
    first, se = _phi_row(mags, pop, phi or arctan_phi())
    return IntegralEstimate(float(first[-1]), float(se[-1]), len(pop))


def kappa_window(seq: FunctionSequence, pop: SamplePopulation, phi: TrialFunction | None,
                 n: int, m: int) -> IntegralEstimate:
    return _single_window(seq, pop, phi, n, m, cauchy=False)


def gamma_window(seq: FunctionSequence, pop: SamplePopulation, n: int, m: int,
                 phi: TrialFunction | None = None) -> IntegralEstimate:
    return _single_window(seq, pop, phi, n, m, cauchy=True)


def tau_window(seq: FunctionSequence, pop: SamplePopulation, n: int, m: int,
               phi: TrialFunction | None = None) -> IntegralEstimate:
    if seq.value_dim < 2:
        raise ValueError("tau windows need vector-valued sequences (value_dim >= 2)")
    return _single_window(seq, pop, phi, n, m, cauchy=True)


# ---------------------------------------------------------------------------
# verdicts


def tail_sup_profile(table: CriticalWindowTable) -> dict[int, tuple[float, float]]:
    """S(n) = value at m_cap(n), with its standard error."""
    return {n: (float(table.values[n][-1]), float(table.standard_errors[n][-1])) for n in table.n_grid}


def _caveat(n_max: int, m_cap: int, population: str) -> str:
    return (f"Evidence at truncation scale only (n_max={n_max}, m_cap(n_max)={m_cap}, "
            f"population: {population}); not a proof of convergence or divergence.")


def verdict_from_profile(profile: dict[int, tuple[float, float]], eps_pass: float = DEFAULT_EPS_PASS,
                         eps_fail: float = DEFAULT_EPS_FAIL, *, mode: str = "kappa", phi: str = "arctan",
                         m_cap: dict[int, int] | None = None, population: str = "",
                         warnings: Sequence[str] = ()) -> ConvergenceVerdict:
    if not (0 < eps_pass < eps_fail):
        raise BadThresholds(f"need 0 < eps_pass < eps_fail, got {eps_pass}, {eps_fail}")
    ns = sorted(profile)
    if len(ns) < 4:
        raise ValueError("verdicts need at least four probed n values")
    S = np.array([profile[n][0] for n in ns])
    se = np.array([profile[n][1] for n in ns])
    s3, e3 = S[-3:], se[-3:]

    nonincreasing = all(s3[i + 1] <= s3[i] + QUAD_SLACK + SE_MARGIN * math.hypot(e3[i], e3[i + 1])
                        for i in range(2))
    if S[-1] + SE_MARGIN * se[-1] < eps_pass and nonincreasing:
        result = Verdict.CONVERGES
    elif np.all(s3 - SE_MARGIN * e3 >= eps_fail) and all(
            abs(s3[i + 1] - s3[i]) < PLATEAU_REL * s3[i] for i in range(2)):
        result = Verdict.DIVERGES
    else:
        result = Verdict.INCONCLUSIVE
    caps = dict(m_cap or {})
    return ConvergenceVerdict(
        result, mode, phi, ns, caps,
        {n: float(profile[n][0]) for n in ns}, {n: float(profile[n][1]) for n in ns},
        (float(eps_pass), float(eps_fail)),
        _caveat(ns[-1], caps.get(ns[-1], ns[-1]), population),
        list(warnings),
    )


def verdict(table: CriticalWindowTable, eps_pass: float = DEFAULT_EPS_PASS,
            eps_fail: float = DEFAULT_EPS_FAIL) -> ConvergenceVerdict:
    """Judge lim_n S(n) = 0 from the tail profile of a window table."""
    warnings = [f"S({n}) is still rising at m_cap={table.m_cap[n]}; the window may be too short"
                for n, r in table.rising_at_cap().items() if r]
    return verdict_from_profile(table.tail_profile(), eps_pass, eps_fail, mode=table.mode.value,
                                phi=table.phi, m_cap=table.m_cap, population=table.population,
                                warnings=warnings)


def direct_tail_sup(seq: FunctionSequence, pop: SamplePopulation, n: int, m_cap: int) -> IntegralEstimate:
    """E sup_{n<=k<=m_cap} arctan|f_k| evaluated without the window kernel."""
    stacked = np.stack([np.arctan(seq.magnitude(k, pop.points)) for k in range(n, m_cap + 1)])
    eta = stacked.max(axis=0)
    return integrate(lambda _pts: eta, pop)


# ---------------------------------------------------------------------------
# other convergence modes


def in_probability_criterion(seq: FunctionSequence, pop: SamplePopulation,
                             pairs: Iterable[tuple[int, int]]) -> dict[tuple[int, int], IntegralEstimate]:
    """E arctan|f_n - f_m| for each requested pair."""
    pairs = [(int(n), int(m)) for n, m in pairs]
    if not pairs:
        raise ValueError("pair grid is empty")
    out = {}
    for n, m in pairs:
        d = apply_norm(seq.values(n, pop.points) - seq.values(m, pop.points), seq.norm, seq.value_dim > 1)
        out[(n, m)] = integrate(lambda _pts, d=d: np.arctan(d), pop)
    return out


def in_probability_profile(values: dict[tuple[int, int], IntegralEstimate]) -> dict[int, tuple[float, float]]:
    """Worst pair value for each first index n."""
    prof: dict[int, tuple[float, float]] = {}
    for (n, _m), est in sorted(values.items()):
        if n not in prof or est.value > prof[n][0]:
            prof[n] = (est.value, est.standard_error)
    return prof


@dataclass
class MomentReport:
    phi: str
    values: dict[int, float]
    running_sup: dict[int, float]
    kappa_sup: float
    bound_holds: bool
    tends_to_zero: bool

    def to_dict(self) -> dict:
        return {
            "phi": self.phi,
            "values": {str(k): v for k, v in self.values.items()},
            "running_sup": {str(k): v for k, v in self.running_sup.items()},
            "kappa_sup": self.kappa_sup,
            "bound_holds": self.bound_holds,
            "tends_to_zero": self.tends_to_zero,
        }


def moment_convergence_check(seq: FunctionSequence, pop: SamplePopulation, phi: TrialFunction,
                             n_grid=DEFAULT_N_GRID, m_cap="4n",
                             eps: float = DEFAULT_EPS_PASS) -> MomentReport:
    """Moments E phi(|f_n|), their running sup, and the bound by sup kappa(phi)."""
    grid = _check_grid(n_grid)
    values = {}
    for n in grid:
        with np.errstate(over="ignore"):
            y = np.asarray(phi(seq.magnitude(n, pop.points)), dtype=np.float64)
        if not np.all(np.isfinite(y)):
            i = int(np.flatnonzero(~np.isfinite(y))[0])
            raise NumericOverflow(f"phi(|f_{n}|) overflows at point {pop.points[i]!r}",
                                  point=pop.points[i], index=n)
        values[n] = math.fsum(pop.weights * y)
    running, top = {}, -math.inf
    for n in grid:
        top = max(top, values[n])
        running[n] = top
    table = kappa_table(seq, pop, phi, grid, m_cap)
    ksup = max(float(v[1:].max()) for v in table.values.values())
    vs = [values[n] for n in grid]
    tends = vs[-1] < eps and all(b <= a + QUAD_SLACK for a, b in zip(vs[-3:-1], vs[-2:]))
    return MomentReport(phi.name, values, running, ksup, top <= ksup + QUAD_SLACK, tends)


@dataclass(frozen=True)
class TchebychevRecord:
    s: int
    N: int
    Q: int
    measure: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.measure <= self.bound + QUAD_SLACK


def tchebychev_check(seq: FunctionSequence, pop: SamplePopulation, s_values: Iterable[int],
                     N_values: Iterable[int], Q_values: Iterable[int],
                     cauchy: bool = False) -> list[TchebychevRecord]:
    """nu{max_{N<=k<=N+Q} arctan|f_k| >= 1/s} against kappa(N, N+Q) / arctan(1/s).

    The measure side is a weighted count on the population; the bound uses
    the window functional of the same population.
    """
    out = []
    s_values = list(s_values)
    for N in N_values:
        for Q in Q_values:
            cache = _ValueCache(seq, pop, N, N + Q)
            mags = cache.differences(N, N + Q) if cauchy else cache.magnitudes(N, N + Q)
            top = np.arctan(mags.max(axis=0))
            kappa = math.fsum(pop.weights * top)
            for s in s_values:
                measure = math.fsum(pop.weights[top >= 1.0 / s])
                out.append(TchebychevRecord(int(s), int(N), int(Q), measure, kappa / math.atan(1.0 / s)))
    return out
