"""Run configurations and the analysis pipelines behind the CLI."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .corpus import DEFAULT_PATHS, DEFAULT_SEED, CorpusEntry, get_entry
from .criterion import (
    DEFAULT_EPS_FAIL,
    DEFAULT_EPS_PASS,
    FunctionSequence,
    MCap,
    Mode,
    Norm,
    Verdict,
    gamma_table,
    in_probability_criterion,
    in_probability_profile,
    kappa_table,
    moment_convergence_check,
    tau_table,
    verdict,
    verdict_from_profile,
)
from .errors import ConfigInvalid, InputNotFound
from .fourier import LnPlus, Method, PeriodicFunction, antonov_functional, method_agreement, partial_sum
from .fourier import periodic_from_csv, theta_constant_integrand, theta_table
from .measure import Provenance, Rule, SamplePopulation, monte_carlo_population, uniform_population
from .report import SCHEMA_VERSION
from .spaces import default_p_grid, gls_bound_check, lambda_table, lp_bar_verdict, natural_function
from .trial import TrialClass, trial_from_name

EXIT_CODES = {Verdict.CONVERGES: 0, Verdict.DIVERGES: 1, Verdict.INCONCLUSIVE: 2}
EXIT_CONFIG, EXIT_INPUT, EXIT_ERROR = 3, 4, 5


@dataclass
class RunConfig:
    input: str
    mode: str | None = None
    phi: str = "arctan"
    n_grid: tuple[int, ...] | None = None
    m_cap: str | None = None
    eps_pass: float | None = None
    eps_fail: float | None = None
    rule: str | None = None
    nodes: int | None = None
    seed: int = DEFAULT_SEED
    paths: int = DEFAULT_PATHS
    norm: str = "euclidean"
    workers: int = 1
    p: float = 2.0
    R: float = math.inf
    N_max: int | None = None
    p_grid: tuple[float, ...] | None = None
    antonov: str = "both"
    method: str = "both"
    extras: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.mode is not None:
            try:
                Mode(self.mode)
            except ValueError:
                raise ConfigInvalid(f"mode: unknown value {self.mode!r}", field="mode") from None
        if self.n_grid is not None:
            g = list(self.n_grid)
            if len(g) < 4 or any(b <= a for a, b in zip(g[:-1], g[1:])) or g[0] < 1:
                raise ConfigInvalid("n_grid: need at least 4 increasing positive indices", field="n_grid")
        ep = self.eps_pass if self.eps_pass is not None else DEFAULT_EPS_PASS
        ef = self.eps_fail if self.eps_fail is not None else DEFAULT_EPS_FAIL
        if not (0 < ep < ef):
            raise ConfigInvalid(f"thresholds: need 0 < eps_pass < eps_fail, got {ep}, {ef}",
                                field="eps_pass")
        if self.m_cap is not None:
            try:
                MCap.parse(self.m_cap)
            except ValueError as exc:
                raise ConfigInvalid(f"m_cap: {exc}", field="m_cap") from None
        try:
            trial_from_name(self.phi)
        except ValueError as exc:
            raise ConfigInvalid(f"phi: {exc}", field="phi") from None
        try:
            Norm(self.norm)
        except ValueError:
            raise ConfigInvalid(f"norm: unknown value {self.norm!r}", field="norm") from None
        if self.workers < 1:
            raise ConfigInvalid("workers: must be >= 1", field="workers")
        if self.paths < 2:
            raise ConfigInvalid("paths: must be >= 2", field="paths")
        if self.rule is not None and self.rule not in {r.value for r in Rule}:
            raise ConfigInvalid(f"rule: unknown value {self.rule!r}", field="rule")
        if self.antonov not in ("printed", "conventional", "both"):
            raise ConfigInvalid(f"antonov: unknown value {self.antonov!r}", field="antonov")
        if self.method not in ("conv", "coef", "both"):
            raise ConfigInvalid(f"method: unknown value {self.method!r}", field="method")
        if not self.p >= 1:
            raise ConfigInvalid("p: must be >= 1", field="p")
        if not self.R > 1:
            raise ConfigInvalid("R: must exceed 1", field="R")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extras")
        d.pop("workers")  # execution detail; results do not depend on it
        d["R"] = "inf" if math.isinf(self.R) else self.R
        for k in ("n_grid", "p_grid"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


def load_sequence_csv(path) -> tuple[FunctionSequence, SamplePopulation, int]:
    """Sampled sequence file: point columns, ``weight``, then ``f_1..f_K``."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [[float(v) for v in row] for row in reader if row]
    if "weight" not in header:
        raise ConfigInvalid(f"{path}: missing 'weight' column", field="input")
    iw = header.index("weight")
    cols = header[iw + 1:]
    if not cols or cols != [f"f_{k}" for k in range(1, len(cols) + 1)]:
        raise ConfigInvalid(f"{path}: columns after 'weight' must be f_1..f_K", field="input")
    data = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    points = data[:, 0] if iw == 1 else data[:, :iw]
    pop = SamplePopulation(points, data[:, iw], description=f"file {path.name}")
    values = data[:, iw + 1:]
    K = values.shape[1]

    def ev(n, pts):
        if n < 1 or n > K:
            raise ConfigInvalid(f"index {n} outside the sampled range 1..{K}", field="m_cap")
        if pts.shape[0] != values.shape[0]:
            raise ValueError("file-backed sequences only evaluate on their own population")
        return values[:, n - 1]

    return FunctionSequence(ev, name=path.stem), pop, K


def resolve_input(cfg: RunConfig) -> CorpusEntry:
    """Corpus entry by name, or an ad hoc entry wrapping a CSV file."""
    try:
        entry = get_entry(cfg.input, cfg.seed, cfg.paths)
    except KeyError:
        path = Path(cfg.input)
        if not path.exists():
            raise InputNotFound(f"input: {cfg.input!r} is neither a corpus entry nor a file",
                                field="input") from None
        with open(path) as fh:
            head = fh.readline().strip()
        if head.startswith("x,value"):
            g = periodic_from_csv(path)
            entry = CorpusEntry(path.stem, Mode.THETA, None, "user-supplied periodic samples",
                                lambda: uniform_population((0.0, 2 * math.pi), 4096), periodic=g)
        else:
            seq, pop, K = load_sequence_csv(path)
            entry = CorpusEntry(path.stem, Mode.KAPPA, None, "user-supplied sampled sequence",
                                lambda: pop, sequence=seq, n_grid=_fit_grid(K),
                                extras={"max_index": K})
    if entry.sequence is not None and entry.sequence.value_dim > 1:
        entry.sequence.norm = Norm(cfg.norm)
    return entry


def _fit_grid(K: int) -> tuple[int, ...]:
    grid = [n for n in (4, 8, 16, 32, 64, 128) if 4 * n <= K]
    return tuple(grid) if len(grid) >= 4 else (1, 2, 3, 4)


def population_for(entry: CorpusEntry, cfg: RunConfig) -> SamplePopulation:
    base = entry.population()
    if cfg.rule is None and cfg.nodes is None:
        return base
    if base.provenance is Provenance.MONTE_CARLO:
        return monte_carlo_population(cfg.nodes or len(base), cfg.seed)
    if entry.periodic is not None:
        interval = (0.0, 2 * math.pi)
    else:
        interval = (float(np.min(base.points)), float(np.max(base.points)))
        interval = (math.floor(interval[0]), math.ceil(interval[1]))
    return uniform_population(interval, cfg.nodes or len(base), cfg.rule or Rule.MIDPOINT.value)


def interpretation_flags(cfg: RunConfig) -> dict:
    return {
        "vector_values": "trial function composed with the norm of f_k(x)",
        "norm": cfg.norm,
        "theta_variant": "pointwise max over k inside the integral; the form taking the max over x "
                         "first (a constant integrand) is reported separately by the fourier command",
        "ln_plus": {"printed": "max(e, ln z)", "conventional": "ln(max(e, z))", "selected": cfg.antonov},
        "difference_kernel": "D_{m,n} = D_m - D_n with m >= n + 1 and n >= 0",
        "window_sup": "sup over m <= m_cap(n) equals the value at m_cap(n) by monotonicity",
        "sufficient_only": ["lambda (Grand Lebesgue Space) verdict", "Orlicz moment check"],
    }


def _settings(entry: CorpusEntry, cfg: RunConfig):
    n_grid = tuple(cfg.n_grid) if cfg.n_grid else entry.n_grid
    m_cap = MCap.parse(cfg.m_cap) if cfg.m_cap else entry.m_cap
    eps_pass = cfg.eps_pass if cfg.eps_pass is not None else entry.eps_pass
    eps_fail = cfg.eps_fail if cfg.eps_fail is not None else entry.eps_fail
    K = entry.extras.get("max_index")
    if K is not None and max(m_cap(n) for n in n_grid) > K:
        raise ConfigInvalid(f"m_cap: windows reach past the sampled index range 1..{K}", field="m_cap")
    return n_grid, m_cap, eps_pass, eps_fail


@dataclass
class AnalysisResult:
    report: dict
    table_rows: list[tuple]
    profile_rows: list[tuple]
    verdict: Verdict
    extra_files: dict[str, tuple[list[str], list[tuple]]] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]


def _base_report(cfg: RunConfig, entry: CorpusEntry, pop: SamplePopulation) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "tool": "aeconv",
        "version": __version__,
        "backend": kernels.BACKEND,
        "input": entry.name,
        "config": cfg.to_dict(),
        "interpretation": interpretation_flags(cfg),
        "population": pop.summary(),
    }


def _attach_truth(report: dict, entry: CorpusEntry, result: Verdict) -> None:
    if entry.ground_truth is not None:
        report["ground_truth"] = entry.ground_truth.to_dict()
        report["matches_ground_truth"] = result.value == entry.expected_verdict


def analyze(cfg: RunConfig) -> AnalysisResult:
    cfg.validate()
    entry = resolve_input(cfg)
    mode = Mode(cfg.mode) if cfg.mode else entry.mode
    pop = population_for(entry, cfg)
    n_grid, m_cap, eps_pass, eps_fail = _settings(entry, cfg)
    phi = trial_from_name(cfg.phi)
    report = _base_report(cfg, entry, pop)

    if mode is Mode.THETA:
        if entry.periodic is None:
            raise ConfigInvalid("mode: theta needs a periodic input", field="mode")
        table = theta_table(entry.periodic, pop, n_grid, m_cap, cfg.workers)
    elif mode in (Mode.KAPPA, Mode.GAMMA, Mode.TAU, Mode.LAMBDA, Mode.LP, Mode.IN_PROB, Mode.MOMENT):
        seq = entry.function_sequence()
        if mode is Mode.KAPPA:
            table = kappa_table(seq, pop, phi, n_grid, m_cap, cfg.workers)
        elif mode is Mode.GAMMA:
            table = gamma_table(seq, pop, phi, n_grid, m_cap, cfg.workers)
        elif mode is Mode.TAU:
            if seq.value_dim < 2:
                raise ConfigInvalid("mode: tau needs a vector-valued input", field="mode")
            table = tau_table(seq, pop, phi, n_grid, m_cap, cfg.workers)
        else:
            return _analyze_other(mode, cfg, entry, seq, pop, phi, n_grid, m_cap, eps_pass, eps_fail, report)
    else:  # pragma: no cover - Mode is exhaustive
        raise ConfigInvalid(f"mode: {mode}", field="mode")

    v = verdict(table, eps_pass, eps_fail)
    report.update(v.to_dict())
    report["mode"] = mode.value
    _attach_truth(report, entry, v.verdict)
    rows = list(table.cells())
    prof = [(n, s, se) for n, (s, se) in table.tail_profile().items()]
    return AnalysisResult(report, rows, prof, v.verdict)


def _analyze_other(mode, cfg, entry, seq, pop, phi, n_grid, m_cap, eps_pass, eps_fail, report):
    caps = {n: m_cap(n) for n in n_grid}
    if mode is Mode.LAMBDA:
        N_max = cfg.N_max or max(caps.values())
        grid = np.asarray(cfg.p_grid, dtype=np.float64) if cfg.p_grid else default_p_grid(cfg.R)
        spec = natural_function(seq, pop, grid, N_max, cfg.R)
        table = lambda_table(seq, pop, spec, n_grid, m_cap)
        v = verdict(table, eps_pass, eps_fail)
        kv = verdict(kappa_table(seq, pop, None, n_grid, m_cap, cfg.workers), eps_pass, eps_fail)
        report.update(v.to_dict())
        report["kappa_verdict"] = kv.verdict.value
        # lambda-bar = 0 is only sufficient: a CONVERGES here must be matched by kappa
        report["consistent_with_kappa"] = v.verdict is not Verdict.CONVERGES or kv.verdict is Verdict.CONVERGES
        report["psi"] = {"p_grid": spec.p_grid.tolist(), "psi": spec.psi.tolist(), "N_max": N_max}
        _attach_truth(report, entry, v.verdict)
        rows = list(table.cells())
        prof = [(n, s, se) for n, (s, se) in table.tail_profile().items()]
        return AnalysisResult(report, rows, prof, v.verdict,
                              {"psi.csv": (["p", "psi"], spec.rows())})
    if mode is Mode.LP:
        lp = lp_bar_verdict(seq, pop, cfg.p, n_grid, m_cap, eps_pass, eps_fail)
        report.update(lp.verdict.to_dict())
        report["p"] = cfg.p
        report["pairwise_profile"] = {str(k): v for k, v in lp.pairwise_profile.items()}
        report["note"] = ("sup over the window of |f_n - f_m|_p drives the verdict; L_p Cauchy "
                          "behaviour alone does not certify a.e. convergence")
        rows = [(n, m, val, 0.0) for n in n_grid for m, val in lp.values[n]]
        prof = [(n, s, 0.0) for n, s in lp.sup_profile.items()]
        return AnalysisResult(report, rows, prof, lp.verdict.verdict)
    if mode is Mode.IN_PROB:
        pairs = sorted({(n, n + 1) for n in n_grid} | {(n, 2 * n) for n in n_grid})
        vals = in_probability_criterion(seq, pop, pairs)
        prof = in_probability_profile(vals)
        v = verdict_from_profile(prof, eps_pass, eps_fail, mode=mode.value, phi="arctan",
                                 m_cap={n: 2 * n for n in n_grid}, population=pop.summary())
        report.update(v.to_dict())
        rows = [(n, m, e.value, e.standard_error) for (n, m), e in vals.items()]
        return AnalysisResult(report, rows, [(n, s, se) for n, (s, se) in prof.items()], v.verdict)
    # MOMENT
    if phi.declared_class is not TrialClass.K:
        raise ConfigInvalid("phi: moment mode needs an unbounded class-K trial function (power:p)",
                            field="phi")
    mom = moment_convergence_check(seq, pop, phi, n_grid, m_cap, eps_pass)
    prof = {n: (val, 0.0) for n, val in mom.values.items()}
    v = verdict_from_profile(prof, eps_pass, eps_fail, mode=mode.value, phi=phi.name, m_cap=caps,
                             population=pop.summary())
    report.update(v.to_dict())
    report["moment"] = mom.to_dict()
    report["note"] = "moment convergence alone does not imply a.e. convergence"
    rows = [(n, n, val, 0.0) for n, val in mom.values.items()]
    return AnalysisResult(report, rows, [(n, s, se) for n, (s, se) in prof.items()], v.verdict)


def fourier_analysis(cfg: RunConfig) -> AnalysisResult:
    cfg.validate()
    entry = resolve_input(cfg)
    if entry.periodic is None:
        raise ConfigInvalid("g: fourier needs a periodic corpus entry or an x,value file", field="g")
    g: PeriodicFunction = entry.periodic
    pop = population_for(entry, cfg)
    n_grid, m_cap, eps_pass, eps_fail = _settings(entry, cfg)
    table = theta_table(g, pop, n_grid, m_cap, cfg.workers)
    v = verdict(table, eps_pass, eps_fail)
    report = _base_report(cfg, entry, pop)
    report.update(v.to_dict())
    report["mode"] = Mode.THETA.value
    _attach_truth(report, entry, v.verdict)

    variants = ["printed", "conventional"] if cfg.antonov == "both" else [cfg.antonov]
    report["antonov"] = {name: antonov_functional(g, pop, LnPlus(name)).value for name in variants}
    n_max = n_grid[-1]
    report["theta_constant_integrand"] = {
        "n": n_max, "m": m_cap(n_max),
        "value": theta_constant_integrand(g, pop, n_max, m_cap(n_max)),
        "note": "constant integrand (max over x taken before integrating)",
    }
    xs = np.linspace(0.0, 2 * math.pi, 65)[:-1] + math.pi / 64
    methods = ["conv", "coef"] if cfg.method == "both" else [cfg.method]
    sums = {mth: partial_sum(g, n_max, xs, Method(mth)) for mth in methods}
    if cfg.method == "both":
        report["method_agreement"] = method_agreement(g, [n_grid[0], n_max], xs)
    header = ["x"] + [f"s_{n_max}_{mth}" for mth in methods]
    rows_ps = [(float(x),) + tuple(float(sums[mth][i]) for mth in methods) for i, x in enumerate(xs)]
    prof = [(n, s, se) for n, (s, se) in table.tail_profile().items()]
    return AnalysisResult(report, list(table.cells()), prof, v.verdict,
                          {"partial_sums.csv": (header, rows_ps)})


def spaces_analysis(cfg: RunConfig) -> AnalysisResult:
    cfg.validate()
    entry = resolve_input(cfg)
    seq = entry.function_sequence()
    pop = population_for(entry, cfg)
    n_grid, m_cap, eps_pass, eps_fail = _settings(entry, cfg)
    N_max = cfg.N_max or max(m_cap(n) for n in n_grid)
    grid = np.asarray(cfg.p_grid, dtype=np.float64) if cfg.p_grid else default_p_grid(cfg.R)
    spec = natural_function(seq, pop, grid, N_max, cfg.R)
    table = lambda_table(seq, pop, spec, n_grid, m_cap)
    v = verdict(table, eps_pass, eps_fail)
    lp = lp_bar_verdict(seq, pop, cfg.p, n_grid, m_cap, eps_pass, eps_fail)
    report = _base_report(cfg, entry, pop)
    report.update(v.to_dict())
    report["mode"] = Mode.LAMBDA.value
    report["gls_bound_max"] = gls_bound_check(seq, pop, spec)
    report["lp"] = lp.to_dict()
    report["psi"] = {"p_grid": spec.p_grid.tolist(), "psi": spec.psi.tolist(), "N_max": N_max}
    prof = [(n, s, se) for n, (s, se) in table.tail_profile().items()]
    return AnalysisResult(report, list(table.cells()), prof, v.verdict,
                          {"psi.csv": (["p", "psi"], spec.rows())})
