"""Trial functions phi and numerical checks of their class membership.

Class KB: even, continuous, strictly increasing on the positive axis, zero
only at zero, bounded.  Class K drops boundedness.  Membership can only be
probed on a grid, so :func:`validate_class` is a diagnostic and the declared
class of a :class:`TrialFunction` stays authoritative for dispatch.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptyGrid, UnsortedGrid, ZeroDenominator
from .kernels import PHI_CODES


class TrialClass(str, enum.Enum):
    KB = "KB"
    K = "K"


@dataclass(frozen=True)
class TrialFunction:
    name: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    declared_class: TrialClass = TrialClass.KB
    is_young_orlicz: bool = False
    bound: float | None = None
    # kernel dispatch; None means evaluate through ``evaluator``
    kernel_code: int | None = None
    param: float = 1.0

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=np.float64))

    @property
    def bounded(self) -> bool:
        return self.declared_class is TrialClass.KB


def arctan_phi() -> TrialFunction:
    return TrialFunction("arctan", lambda x: np.arctan(np.abs(x)), TrialClass.KB,
                         bound=math.pi / 2, kernel_code=PHI_CODES["arctan"])


def ratio1_phi() -> TrialFunction:
    return TrialFunction("ratio1", lambda x: np.abs(x) / (1.0 + np.abs(x)), TrialClass.KB,
                         bound=1.0, kernel_code=PHI_CODES["ratio1"])


def ratio2_phi() -> TrialFunction:
    return TrialFunction("ratio2", lambda x: x * x / (1.0 + x * x), TrialClass.KB,
                         bound=1.0, kernel_code=PHI_CODES["ratio2"])


def power_phi(p: float) -> TrialFunction:
    if not p > 0:
        raise ValueError(f"power trial function needs p > 0, got {p}")
    p = float(p)
    return TrialFunction(f"power:{p:g}", lambda x: np.abs(x) ** p, TrialClass.K,
                         is_young_orlicz=p >= 1.0, kernel_code=PHI_CODES["power"], param=p)


def trial_from_name(spec: str) -> TrialFunction:
    """Parse ``arctan``, ``ratio1``, ``ratio2`` or ``power:p``."""
    spec = spec.strip()
    if spec == "arctan":
        return arctan_phi()
    if spec == "ratio1":
        return ratio1_phi()
    if spec == "ratio2":
        return ratio2_phi()
    if spec.startswith("power:"):
        return power_phi(float(spec.split(":", 1)[1]))
    raise ValueError(f"unknown trial function {spec!r}; use arctan|ratio1|ratio2|power:p")


def default_probe_grid(points: int = 241) -> np.ndarray:
    return np.geomspace(1e-6, 1e6, points)


@dataclass
class ConditionResult:
    passed: bool
    worst_violation: float
    note: str = ""


@dataclass
class ClassValidationReport:
    name: str
    declared_class: TrialClass
    conditions: dict[str, ConditionResult]
    grid_min: float
    grid_max: float
    grid_size: int
    empirical_max: float
    growth_ratio: float
    notes: list[str] = field(default_factory=list)

    @property
    def passes_kb(self) -> bool:
        return all(self.conditions[c].passed for c in "ABCDE")

    @property
    def passes_k(self) -> bool:
        return all(self.conditions[c].passed for c in "ABCD")

    @property
    def passed(self) -> bool:
        return self.passes_kb if self.declared_class is TrialClass.KB else self.passes_k

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "declared_class": self.declared_class.value,
            "passed": self.passed,
            "passes_KB": self.passes_kb,
            "passes_K": self.passes_k,
            "conditions": {k: {"passed": v.passed, "worst_violation": v.worst_violation,
                               "note": v.note} for k, v in self.conditions.items()},
            "grid": {"min": self.grid_min, "max": self.grid_max, "size": self.grid_size},
            "empirical_max": self.empirical_max,
            "growth_ratio": self.growth_ratio,
            "notes": list(self.notes),
        }


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64).ravel()
    if g.size == 0:
        raise EmptyGrid("probe grid is empty")
    if np.any(np.diff(g) <= 0):
        raise UnsortedGrid("probe grid must be strictly increasing")
    return g


def _max_jump(phi, lo: np.ndarray, hi: np.ndarray, fine_rel: float, iters: int = 60) -> np.ndarray:
    """Relative residual |phi(hi) - phi(lo)| after bisecting toward the larger half-change.

    A continuous phi drives the residual to ~0; a jump keeps its size.
    """
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(iters):
        wide = (hi - lo) > fine_rel * np.maximum(1.0, np.abs(hi))
        if not wide.any():
            break
        mid = 0.5 * (lo + hi)
        left = np.abs(phi(mid) - phi(lo))
        right = np.abs(phi(hi) - phi(mid))
        go_left = left >= right
        hi = np.where(wide & go_left, mid, hi)
        lo = np.where(wide & ~go_left, mid, lo)
    scale = np.maximum(1.0, np.maximum(np.abs(phi(hi)), np.abs(phi(lo))))
    return np.abs(phi(hi) - phi(lo)) / scale


def validate_class(phi: TrialFunction, grid=None, continuity_tol: float = 1e-3,
                   fine_step: float = 1e-10) -> ClassValidationReport:
    """Probe conditions A-E on a positive grid (mirrored for A and D)."""
    g = _check_grid(default_probe_grid() if grid is None else grid)
    notes = []
    if g.size < 16:
        notes.append(f"grid has only {g.size} points (16 recommended)")
    if g[0] > 1e-6 or g[-1] < 1e6:
        notes.append("grid does not span [1e-6, 1e6]; boundedness probe is weak")
    if g[0] <= 0:
        raise UnsortedGrid("probe grid must be positive")
    with np.errstate(all="ignore"):
        pos = np.asarray(phi(g), dtype=np.float64)
        neg = np.asarray(phi(-g), dtype=np.float64)
        at0 = float(np.asarray(phi(np.zeros(1)))[0])

    both = np.concatenate([pos, neg])
    viol_a = max(abs(at0), float(np.max(np.maximum(0.0, -np.nan_to_num(both, nan=-np.inf)))))
    ok_a = at0 == 0.0 and bool(np.all(both > 0))
    cond = {"A": ConditionResult(ok_a, viol_a, "" if ok_a else "phi(0) != 0 or phi(x) <= 0 off zero")}

    d = np.diff(pos)
    ok_b = bool(np.all(d > 0))
    cond["B"] = ConditionResult(ok_b, float(max(0.0, -np.min(d))) if d.size else 0.0,
                                "" if ok_b else "not strictly increasing on the grid")

    lo = np.concatenate([[0.0], g[:-1], -g[::-1][:-1], [-g[0]]])
    hi = np.concatenate([g[:1], g[1:], -g[::-1][1:], [0.0]])
    with np.errstate(all="ignore"):
        jumps = _max_jump(phi, np.minimum(lo, hi), np.maximum(lo, hi), fine_step)
    jumps = np.nan_to_num(jumps, nan=np.inf)
    worst_c = float(jumps.max())
    ok_c = worst_c <= continuity_tol
    cond["C"] = ConditionResult(ok_c, worst_c, "" if ok_c else "jump survives bisection to the fine step")

    asym = np.abs(np.nan_to_num(neg - pos, nan=np.inf))
    ok_d = bool(np.all(asym <= 1e-12))
    cond["D"] = ConditionResult(ok_d, float(asym.max()), "" if ok_d else "phi(-x) != phi(x)")

    # growth over the top two decades of the grid
    top = g[-1]
    i1 = int(np.searchsorted(g, top / 10.0))
    i2 = int(np.searchsorted(g, top / 100.0))
    inc_hi = pos[-1] - pos[min(i1, g.size - 1)]
    inc_lo = pos[min(i1, g.size - 1)] - pos[min(i2, g.size - 1)]
    growth = float(inc_hi / inc_lo) if inc_lo > 0 else (math.inf if inc_hi > 0 else 0.0)
    emp_max = float(np.nanmax(np.abs(both)))
    growing = not (growth < 1.0) or not math.isfinite(emp_max)
    over = phi.bound is not None and emp_max > phi.bound * (1 + 1e-12)
    ok_e = not growing and not over
    note = f"empirical max {emp_max!r}"
    if growing:
        note += "; increments do not decay at the largest abscissae"
    if over:
        note += f"; exceeds declared bound {phi.bound!r}"
    cond["E"] = ConditionResult(ok_e, emp_max if not ok_e else 0.0, note)

    return ClassValidationReport(phi.name, phi.declared_class, cond, float(g[0]), float(g[-1]),
                                 int(g.size), emp_max, growth, notes)


def delta2_ratio(phi: TrialFunction, grid) -> float:
    """sup over the grid of phi(2x) / phi(x)."""
    g = np.asarray(grid, dtype=np.float64).ravel()
    if g.size == 0:
        raise EmptyGrid("grid is empty")
    if np.any(g <= 0):
        raise ValueError("delta2 grid must be positive")
    den = np.asarray(phi(g), dtype=np.float64)
    if np.any(den == 0):
        x = float(g[np.flatnonzero(den == 0)[0]])
        raise ZeroDenominator(f"phi vanishes at x={x!r}", point=x)
    with np.errstate(over="ignore"):
        return float(np.max(np.asarray(phi(2.0 * g)) / den))
