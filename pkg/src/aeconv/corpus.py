"""Sequences and periodic functions with known convergence behaviour.

Each entry carries the population, window rule, and analysis mode it should
be run with, plus the analytic ground truth the verdicts are checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .criterion import DEFAULT_EPS_FAIL, DEFAULT_EPS_PASS, DEFAULT_N_GRID, FunctionSequence, MCap, Mode, Norm
from .fourier import PeriodicFunction, Smoothness, partial_sum_sequence
from .measure import (
    Rule,
    SamplePopulation,
    composite_population,
    monte_carlo_population,
    path_rng,
    uniform_population,
)

DEFAULT_SEED = 20261019
DEFAULT_PATHS = 10_000
TYPEWRITER_NODES = 2 ** 12


@dataclass(frozen=True)
class GroundTruth:
    ae_converges: bool
    in_measure: bool
    lp_converges: dict[float, bool] = field(default_factory=dict)

    def __post_init__(self):
        if self.ae_converges and not self.in_measure:
            raise ValueError("a.e. convergence implies convergence in measure on probability spaces")

    def to_dict(self) -> dict:
        return {"ae_converges": self.ae_converges, "in_measure": self.in_measure,
                "lp_converges": {f"{p:g}": v for p, v in self.lp_converges.items()}}


@dataclass(eq=False)
class CorpusEntry:
    name: str
    mode: Mode
    ground_truth: GroundTruth | None
    oracle_notes: str
    make_population: Callable[[], SamplePopulation]
    sequence: FunctionSequence | None = None
    periodic: PeriodicFunction | None = None
    m_cap: MCap = field(default_factory=MCap)
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    eps_pass: float = DEFAULT_EPS_PASS
    eps_fail: float = DEFAULT_EPS_FAIL
    extras: dict = field(default_factory=dict)
    _population: SamplePopulation | None = field(default=None, repr=False)

    def population(self) -> SamplePopulation:
        if self._population is None:
            self._population = self.make_population()
        return self._population

    @property
    def expected_verdict(self) -> str | None:
        if self.ground_truth is None:
            return None
        return "CONVERGES" if self.ground_truth.ae_converges else "DIVERGES"

    def function_sequence(self) -> FunctionSequence:
        """The sequence itself; for periodic entries, partial sums minus g."""
        if self.sequence is not None:
            return self.sequence
        top = max(self.m_cap(n) for n in self.n_grid)
        seq = partial_sum_sequence(self.periodic, top)
        seq.limit = self.periodic
        return seq

    def describe(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode.value,
            "m_cap": self.m_cap.describe(),
            "n_grid": list(self.n_grid),
            "thresholds": {"eps_pass": self.eps_pass, "eps_fail": self.eps_fail},
            "ground_truth": self.ground_truth.to_dict() if self.ground_truth else None,
            "expected_verdict": self.expected_verdict,
            "oracle_notes": self.oracle_notes,
        }


# ---------------------------------------------------------------------------
# typewriter


def typewriter_position(n: int) -> tuple[int, int]:
    """Global index n >= 1 -> (pass j, block i); pass j has 2^j blocks, i is 1-based."""
    if n < 1:
        raise ValueError("typewriter indices start at 1")
    j = (n + 1).bit_length() - 1
    return j, n - (2 ** j - 1) + 1


def typewriter_index(j: int, i: int) -> int:
    return 2 ** j - 1 + (i - 1)


def typewriter_block(n: int) -> tuple[float, float]:
    j, i = typewriter_position(n)
    return (i - 1) / 2 ** j, i / 2 ** j


def typewriter(n: int, x: np.ndarray) -> np.ndarray:
    j, i = typewriter_position(n)
    lo, hi = (i - 1) / 2 ** j, i / 2 ** j
    inside = (x >= lo) & ((x < hi) | ((i == 2 ** j) & (x <= hi)))
    return inside.astype(np.float64)


def typewriter_full_pass_cap(n: int) -> int:
    """Last index of the pass after the one containing n, so the window covers a full pass."""
    j, _ = typewriter_position(n)
    return 2 ** (j + 2) - 2


# ---------------------------------------------------------------------------
# Monte Carlo paths


@lru_cache(maxsize=4)
def path_normals(seed: int, paths: int, length: int, dim: int = 1) -> np.ndarray:
    """Standard normals, shape (paths, length, dim); path i depends only on (seed, i)."""
    out = np.empty((paths, length, dim))
    for i in range(paths):
        out[i] = path_rng(seed, i).standard_normal((length, dim))
    out.setflags(write=False)
    return out


def _length_for(n: int) -> int:
    return max(512, 1 << (int(n) - 1).bit_length())


@lru_cache(maxsize=2)
def _walk(seed: int, paths: int, length: int) -> np.ndarray:
    z = path_normals(seed, paths, length, 2)
    j = np.arange(1, length + 1, dtype=np.float64)
    walk = np.cumsum(z / (j * j)[None, :, None], axis=1)
    walk.setflags(write=False)
    return walk


def random_decay_sequence(seed: int, paths: int) -> FunctionSequence:
    def ev(n, pts):
        z = path_normals(seed, paths, _length_for(n), 1)
        return z[pts.astype(np.int64), n - 1, 0] / float(n) ** 2

    return FunctionSequence(ev, name="random-decay")


def random_walk_sequence(seed: int, paths: int, norm: Norm = Norm.EUCLIDEAN) -> FunctionSequence:
    def ev(n, pts):
        return _walk(seed, paths, _length_for(n))[pts.astype(np.int64), n - 1, :]

    def block(lo, hi, pts):
        w = _walk(seed, paths, _length_for(hi))
        return np.moveaxis(w[pts.astype(np.int64), lo - 1:hi, :], 1, 0)

    return FunctionSequence(ev, value_dim=2, norm=norm, name="random-walk-2d", batch_evaluator=block)


# ---------------------------------------------------------------------------
# periodic functions


def cosine() -> PeriodicFunction:
    return PeriodicFunction(np.cos, Smoothness.TRIG_POLY, "cosine", degree=1)


def trig_poly(degree: int) -> PeriodicFunction:
    """0.5 + sum_{k<=D} cos(kx)/k + sin(kx)/(k+1)."""
    if degree < 0:
        raise ValueError("degree must be >= 0")

    def ev(x):
        out = np.full_like(np.asarray(x, dtype=np.float64), 0.5)
        for k in range(1, degree + 1):
            out = out + np.cos(k * x) / k + np.sin(k * x) / (k + 1)
        return out

    return PeriodicFunction(ev, Smoothness.TRIG_POLY, f"trigpoly-{degree}", degree=degree)


def square_wave() -> PeriodicFunction:
    return PeriodicFunction(lambda x: np.sign(math.pi - x), Smoothness.PIECEWISE, "square-wave",
                            breakpoints=(0.0, math.pi))


def sawtooth() -> PeriodicFunction:
    """(pi - x)/2 on (0, 2 pi); Fourier series sum sin(kx)/k."""
    return PeriodicFunction(lambda x: 0.5 * (math.pi - x), Smoothness.PIECEWISE, "sawtooth",
                            breakpoints=(0.0,))


def periodic_population(nodes: int = 4096) -> SamplePopulation:
    return uniform_population((0.0, 2.0 * math.pi), nodes, Rule.MIDPOINT)


# ---------------------------------------------------------------------------


def _shrink_spike_population(max_index: int = 512) -> SamplePopulation:
    k = np.arange(1, max_index + 1, dtype=np.float64)
    return composite_population(np.concatenate([[0.0], 1.0 / k ** 2]), 2, Rule.GAUSS_LEGENDRE)


def _periodic_entry(g: PeriodicFunction, notes: str, jumps: bool) -> CorpusEntry:
    return CorpusEntry(
        g.name, Mode.THETA, GroundTruth(True, True, {1.0: True, 2.0: True}), notes,
        periodic_population, periodic=g,
        eps_pass=0.05 if jumps else DEFAULT_EPS_PASS,
    )


def builtin_corpus(seed: int = DEFAULT_SEED, paths: int = DEFAULT_PATHS) -> list[CorpusEntry]:
    unit_gauss = lambda: uniform_population((0.0, 1.0), 200, Rule.GAUSS_LEGENDRE)  # noqa: E731
    return [
        CorpusEntry(
            "power", Mode.KAPPA, GroundTruth(True, True, {1.0: True, 2.0: True, 4.0: True}),
            "x^n on [0,1]: window max is x^n, so S(n) = int_0^1 arctan(x^n) dx <= 1/(n+1).",
            unit_gauss, sequence=FunctionSequence(lambda n, x: x ** n, name="power"),
        ),
        CorpusEntry(
            "typewriter", Mode.KAPPA, GroundTruth(False, True, {1.0: True, 2.0: True}),
            "Indicator of dyadic block i of pass j (2^j blocks of length 2^-j). Any window "
            "covering a full pass has max 1 everywhere, so S(n) = pi/4; adjacent blocks are "
            "disjoint, so E arctan|f_n - f_{n+1}| = (pi/4)(len_n + len_{n+1}).",
            lambda: uniform_population((0.0, 1.0), TYPEWRITER_NODES, Rule.MIDPOINT),
            sequence=FunctionSequence(typewriter, name="typewriter"),
            m_cap=MCap(func=typewriter_full_pass_cap, label="end of next pass"),
        ),
        CorpusEntry(
            "recip", Mode.KAPPA, GroundTruth(True, True, {1.0: True, 2.0: True}),
            "f_n = 1/n everywhere: S(n) = arctan(1/n).",
            lambda: uniform_population((0.0, 1.0), 64, Rule.MIDPOINT),
            sequence=FunctionSequence(lambda n, x: np.full(x.shape[0], 1.0 / n), name="recip"),
        ),
        CorpusEntry(
            "oscillate", Mode.KAPPA, GroundTruth(False, False, {1.0: False, 2.0: False}),
            "f_n = (-1)^n everywhere: every window has |f| = 1, S(n) = pi/4.",
            lambda: uniform_population((0.0, 1.0), 64, Rule.MIDPOINT),
            sequence=FunctionSequence(lambda n, x: np.full(x.shape[0], (-1.0) ** n), name="oscillate"),
        ),
        CorpusEntry(
            "shrink-spike", Mode.KAPPA, GroundTruth(True, True, {1.0: True, 2.0: False, 4.0: False}),
            "n on [0, 1/n^2]: windows vanish outside [0, 1/n^2] so S(n) <= (pi/2)/n^2; "
            "|f_n|_p = n^(1-2/p). Population breaks at every 1/k^2, k <= 512.",
            _shrink_spike_population,
            sequence=FunctionSequence(lambda n, x: np.where(x <= 1.0 / n ** 2, float(n), 0.0),
                                      name="shrink-spike"),
        ),
        CorpusEntry(
            "random-decay", Mode.KAPPA, GroundTruth(True, True, {1.0: True, 2.0: True}),
            "Z_n / n^2 with iid standard normal Z_n: sum P(|Z_n| > eps n^2) < inf, so a.s. -> 0.",
            lambda: monte_carlo_population(paths, seed),
            sequence=random_decay_sequence(seed, paths),
        ),
        CorpusEntry(
            "random-walk-2d", Mode.TAU, GroundTruth(True, True, {1.0: True, 2.0: True}),
            "sum_{j<=k} Z_j / j^2 in R^2: absolutely summable a.s., so the walk is a.s. Cauchy; "
            "the tail sup is bounded by E arctan(sum_{j>n} |Z_j| / j^2).",
            lambda: monte_carlo_population(paths, seed),
            sequence=random_walk_sequence(seed, paths),
        ),
        _periodic_entry(cosine(), "cos x is its own partial sum for n >= 1: theta = 0.", False),
        _periodic_entry(trig_poly(8), "Degree-8 trigonometric polynomial: theta_n = 0 for n >= 8.", False),
        _periodic_entry(square_wave(), "sign(pi - x): piecewise smooth, partial sums converge "
                                       "except at the jumps; Gibbs layers shrink like 1/n.", True),
        _periodic_entry(sawtooth(), "(pi - x)/2 with one jump at 0; coefficients 1/k.", True),
    ]


def corpus_names() -> list[str]:
    return [e.name for e in builtin_corpus()]


def get_entry(name: str, seed: int = DEFAULT_SEED, paths: int = DEFAULT_PATHS) -> CorpusEntry:
    """Look up an entry; ``trigpoly-D`` works for any degree D."""
    for e in builtin_corpus(seed, paths):
        if e.name == name:
            return e
    if name.startswith("trigpoly-"):
        try:
            degree = int(name.split("-", 1)[1])
        except ValueError:
            pass
        else:
            return _periodic_entry(trig_poly(degree),
                                   f"Degree-{degree} trigonometric polynomial: theta_n = 0 for n >= {degree}.",
                                   False)
    raise KeyError(name)
