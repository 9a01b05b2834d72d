"""Discretized probability spaces and the integration engine.

A :class:`SamplePopulation` is a finite set of points with nonnegative weights
summing to one.  It stands in for the probability measure every functional in
the package integrates against.  Populations come from deterministic
quadrature (``QUADRATURE``) or from seeded Monte Carlo paths (``MONTE_CARLO``).
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_legendre

from .errors import (
    DegenerateInterval,
    EmptyPartition,
    NonFiniteIntegrand,
    NonPositiveMass,
)

WEIGHT_TOL = 1e-12
DEFAULT_TRUNCATION = 20


class Provenance(str, enum.Enum):
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


class Rule(str, enum.Enum):
    MIDPOINT = "midpoint"
    GAUSS_LEGENDRE = "gauss-legendre"


@dataclass(frozen=True)
class PartitionBlock:
    """One piece X_m of a sigma-finite partition.

    ``sampler(k)`` returns ``(points, weights)`` for k requested nodes; the
    weights are proportional to the restriction of the source measure and are
    rescaled so the block carries its share of the probability.
    """

    index: int
    mass: float
    sampler: Callable[[int], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    standard_error: float = 0.0
    node_count: int = 0

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True, eq=False)
class SamplePopulation:
    points: np.ndarray
    weights: np.ndarray
    provenance: Provenance = Provenance.QUADRATURE
    seed: int | None = None
    path_count: int | None = None
    description: str = ""
    block_ids: np.ndarray | None = field(default=None, repr=False)
    truncation: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights differ in length")
        if w.ndim != 1 or w.shape[0] == 0:
            raise ValueError("population needs a nonempty 1-d weight vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        total = math.fsum(w)
        if total <= 0:
            raise ValueError("weights sum to zero")
        w = w / total
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if self.provenance is Provenance.MONTE_CARLO and self.seed is None:
            raise ValueError("Monte Carlo populations must record their seed")

    def __len__(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return 1 if self.points.ndim == 1 else self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights)

    def summary(self) -> str:
        text = f"{len(self)} {self.provenance.value} nodes"
        if self.description:
            text += f" ({self.description})"
        if self.seed is not None:
            text += f", seed {self.seed}"
        return text

    def to_csv(self, path) -> None:
        """Write ``point,weight`` (or ``p1..pd,weight``) with round-trip floats."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if self.points.ndim == 1:
                writer.writerow(["point", "weight"])
                for p, w in zip(self.points, self.weights):
                    writer.writerow([repr(float(p)), repr(float(w))])
            else:
                d = self.points.shape[1]
                writer.writerow([f"p{i + 1}" for i in range(d)] + ["weight"])
                for row, w in zip(self.points, self.weights):
                    writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])

    @classmethod
    def from_csv(cls, path, **kwargs) -> "SamplePopulation":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
        if not header or header[-1] != "weight":
            raise ValueError(f"{path}: last column must be 'weight'")
        data = np.array(rows, dtype=np.float64).reshape(-1, len(header))
        points = data[:, 0] if len(header) == 2 else data[:, :-1]
        return cls(points, data[:, -1], **kwargs)


@lru_cache(maxsize=64)
def _gauss_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def rule_nodes(a: float, b: float, n: int, rule: Rule | str) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and (unnormalized, length-summing) weights on [a, b]."""
    rule = Rule(rule)
    h = b - a
    if rule is Rule.MIDPOINT:
        x = a + (np.arange(n) + 0.5) * (h / n)
        return x, np.full(n, h / n)
    t, w = _gauss_nodes(n)
    return a + 0.5 * h * (t + 1.0), 0.5 * h * w


def uniform_population(interval: Sequence[float], node_count: int,
                       rule: Rule | str = Rule.MIDPOINT) -> SamplePopulation:
    """Normalized Lebesgue measure on ``[a, b]`` discretized by a fixed rule."""
    a, b = float(interval[0]), float(interval[1])
    if not (b > a) or not (math.isfinite(a) and math.isfinite(b)):
        raise DegenerateInterval(f"need a < b, got [{a}, {b}]")
    if node_count < 2:
        raise ValueError("node_count must be at least 2")
    x, w = rule_nodes(a, b, node_count, rule)
    return SamplePopulation(x, w, description=f"{Rule(rule).value} on [{a!r}, {b!r}]")


def composite_population(breakpoints: Sequence[float], nodes_per_piece: int,
                         rule: Rule | str = Rule.GAUSS_LEGENDRE) -> SamplePopulation:
    """Normalized Lebesgue measure on [min, max] with a rule on each piece.

    Useful when the integrands jump at known places: putting the jumps at
    piece boundaries keeps every piece smooth.
    """
    edges = np.unique(np.asarray(breakpoints, dtype=np.float64))
    if edges.shape[0] < 2:
        raise DegenerateInterval("need at least two distinct breakpoints")
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = rule_nodes(a, b, nodes_per_piece, rule)
        xs.append(x)
        ws.append(w)
    return SamplePopulation(
        np.concatenate(xs), np.concatenate(ws),
        description=f"composite {Rule(rule).value}, {edges.shape[0] - 1} pieces",
    )


def equivalent_probability_measure(blocks: Sequence[PartitionBlock],
                                   nodes_per_block: int) -> SamplePopulation:
    """Probability measure with the same null sets as a sigma-finite one.

    Block m gets total weight 2^-m, renormalized over the truncated partition,
    and inside a block the points keep their relative source-measure weights.
    """
    if not blocks:
        raise EmptyPartition("partition has no blocks")
    if nodes_per_block < 1:
        raise ValueError("nodes_per_block must be >= 1")
    ordered = sorted(blocks, key=lambda b: b.index)
    if [b.index for b in ordered] != list(range(1, len(ordered) + 1)):
        raise ValueError("block indices must be unique and contiguous from 1")
    for b in ordered:
        if not (math.isfinite(b.mass) and b.mass > 0):
            raise NonPositiveMass(f"block {b.index} has mass {b.mass!r}", index=b.index)
    trunc = len(ordered)
    norm = 1.0 - 2.0 ** (-trunc)
    points, weights, ids = [], [], []
    for b in ordered:
        x, w = b.sampler(nodes_per_block)
        x = np.asarray(x, dtype=np.float64)
        w = np.asarray(w, dtype=np.float64)
        if np.any(w < 0) or math.fsum(w) <= 0:
            raise NonPositiveMass(f"block {b.index} sampler returned no mass", index=b.index)
        share = 2.0 ** (-b.index) / norm
        points.append(x)
        weights.append(w * (share / math.fsum(w)))
        ids.append(np.full(x.shape[0], b.index))
    return SamplePopulation(
        np.concatenate(points), np.concatenate(weights),
        block_ids=np.concatenate(ids), truncation=trunc,
        description=f"equivalent probability measure, {trunc} blocks",
    )


def block_weight(population: SamplePopulation, index: int) -> float:
    if population.block_ids is None:
        raise ValueError("population was not built from a partition")
    return math.fsum(population.weights[population.block_ids == index])


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Generator for one Monte Carlo path, derived from (seed, path index) only."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(path_index,))))


def monte_carlo_population(path_count: int, seed: int) -> SamplePopulation:
    """Equal-weight population whose points are path indices 0..path_count-1."""
    if path_count < 2:
        raise ValueError("need at least two paths")
    return SamplePopulation(
        np.arange(path_count, dtype=np.float64),
        np.full(path_count, 1.0 / path_count),
        provenance=Provenance.MONTE_CARLO, seed=int(seed), path_count=int(path_count),
        description="seeded paths",
    )


def check_finite(values: np.ndarray, population: SamplePopulation, what: str = "integrand") -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        flat = bad.reshape(bad.shape[0], -1).any(axis=1) if bad.ndim > 1 else bad
        i = int(np.flatnonzero(flat)[0])
        point = population.points[i]
        raise NonFiniteIntegrand(f"{what} is not finite at point {point!r} (node {i})",
                                 point=point, node=i)


def integrate(integrand: Callable[[np.ndarray], np.ndarray],
              population: SamplePopulation) -> IntegralEstimate:
    """Weighted sum of a vectorized integrand over the population.

    ``integrand`` receives the full points array and returns one value per
    point.  Monte Carlo estimates carry ``std / sqrt(path_count)``.
    """
    y = np.asarray(integrand(population.points), dtype=np.float64)
    if y.shape == ():
        y = np.full(len(population), float(y))
    check_finite(y, population)
    value = math.fsum(population.weights * y)
    se = 0.0
    if population.provenance is Provenance.MONTE_CARLO:
        se = float(np.std(y, ddof=1) / math.sqrt(len(population)))
    return IntegralEstimate(value, se, len(population))
