"""Command line entry point: ``aeconv``.

Exit codes: 0 CONVERGES, 1 DIVERGES, 2 INCONCLUSIVE, 3 invalid configuration,
4 input not found, 5 any other diagnostic failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__, kernels
from .corpus import DEFAULT_PATHS, DEFAULT_SEED, builtin_corpus, get_entry
from .errors import ConfigInvalid, DiagnosticError, InputNotFound
from .pipeline import (
    EXIT_CONFIG,
    EXIT_ERROR,
    EXIT_INPUT,
    AnalysisResult,
    RunConfig,
    analyze,
    fourier_analysis,
    spaces_analysis,
)
from .report import json_text, write_csv, write_json
from .trial import trial_from_name, validate_class


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--phi", default="arctan", help="arctan | ratio1 | ratio2 | power:p")
    p.add_argument("--n-grid", dest="n_grid", type=_int_list)
    p.add_argument("--m-cap", dest="m_cap", help="window cap rule, e.g. 4n or n+1")
    p.add_argument("--eps-pass", dest="eps_pass", type=float)
    p.add_argument("--eps-fail", dest="eps_fail", type=float)
    p.add_argument("--rule", choices=["midpoint", "gauss-legendre"])
    p.add_argument("--nodes", type=int)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--paths", type=int, default=DEFAULT_PATHS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--norm", default="euclidean", choices=["euclidean", "sup", "one"])
    p.add_argument("--out", help="directory for verdict.json and CSV tables")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aeconv", description="Numerical a.e.-convergence diagnostics.")
    parser.add_argument("--version", action="version", version=f"aeconv {__version__} ({kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="window functional verdict for a sequence")
    _common(a)
    a.add_argument("--input", help="corpus entry name or CSV file")
    a.add_argument("--mode", choices=["kappa", "gamma", "tau", "theta", "lambda", "lp", "in-prob", "moment"])
    a.add_argument("--p", type=float, default=2.0)
    a.add_argument("--p-grid", dest="p_grid", type=_float_list)
    a.add_argument("--R", type=float, default=math.inf)
    a.add_argument("--N-max", dest="N_max", type=int)

    f = sub.add_parser("fourier", help="theta verdict for Fourier partial sums")
    _common(f)
    f.add_argument("--g", dest="input", help="periodic corpus entry or x,value CSV file")
    f.add_argument("--antonov", nargs="?", const="both", default="both",
                   choices=["printed", "conventional", "both"])
    f.add_argument("--method", default="both", choices=["conv", "coef", "both"])

    s = sub.add_parser("spaces", help="Grand Lebesgue Space norms and the lambda verdict")
    _common(s)
    s.add_argument("--input", help="corpus entry name or CSV file")
    s.add_argument("--p-grid", dest="p_grid", type=_float_list)
    s.add_argument("--R", type=float, default=math.inf)
    s.add_argument("--N-max", dest="N_max", type=int)
    s.add_argument("--p", type=float, default=2.0)

    c = sub.add_parser("corpus", help="list or describe the built-in corpus")
    c.add_argument("action", choices=["list", "describe"])
    c.add_argument("name", nargs="?")

    v = sub.add_parser("validate-trial", help="check the class conditions for a trial function")
    v.add_argument("phi", help="arctan | ratio1 | ratio2 | power:p")
    return parser


_LIST_KEYS = {"n_grid": _int_list, "p_grid": _float_list}
_NUM_KEYS = {"eps_pass": float, "eps_fail": float, "nodes": int, "seed": int, "paths": int,
             "workers": int, "p": float, "R": float, "N_max": int}


def read_config(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    path = Path(path)
    if not path.exists():
        raise InputNotFound(f"config: {path} not found", field="config")
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"config line {lineno}: expected key=value", field="config")
        key, val = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "g":
            key = "input"
        try:
            if key in _LIST_KEYS:
                out[key] = _LIST_KEYS[key](val)
            elif key in _NUM_KEYS:
                out[key] = _NUM_KEYS[key](val)
            else:
                out[key] = val
        except (ValueError, argparse.ArgumentTypeError):
            raise ConfigInvalid(f"{key}: cannot parse {val!r}", field=key) from None
    return out


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg_path = getattr(ns, "config", None)
    if cfg_path:
        values = read_config(cfg_path)
        sub = parser._subparsers._group_actions[0].choices[ns.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigInvalid(f"config: unknown key(s) {', '.join(unknown)}", field=unknown[0])
        sub.set_defaults(**values)
        ns = parser.parse_args(argv)
    return ns


def _run_config(ns: argparse.Namespace) -> RunConfig:
    if not ns.input:
        raise ConfigInvalid("input: no input given", field="input")
    keys = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in vars(ns).items() if k in keys and v is not None})


def _write_outputs(res: AnalysisResult, out: str | None) -> None:
    if out is None:
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    write_json(d / "verdict.json", res.report)
    write_csv(d / "table.csv", ["n", "m", "value", "std_err"], res.table_rows)
    write_csv(d / "tail_profile.csv", ["n", "tail_sup", "std_err"], res.profile_rows)
    for name, (header, rows) in res.extra_files.items():
        write_csv(d / name, header, rows)


def _summary(res: AnalysisResult) -> str:
    r = res.report
    lines = [f"{r['input']}: {r['verdict']} (mode={r['mode']}, phi={r['phi']}, backend={r['backend']})"]
    for n, s, se in res.profile_rows:
        lines.append(f"  n={n:<5d} tail_sup={s:.6g}" + (f" +/- {se:.2g}" if se else ""))
    for w in r.get("warnings", []):
        lines.append(f"  warning: {w}")
    lines.append(f"  {r['caveat']}")
    return "\n".join(lines)


def _error_exit(exc: DiagnosticError, code: int) -> int:
    payload = {"error": exc.code, "message": str(exc)}
    payload.update({k: (v if isinstance(v, (int, float, str)) else repr(v)) for k, v in exc.details.items()})
    print(json_text(payload), file=sys.stderr, end="")
    return code


def main(argv=None) -> int:
    try:
        try:
            ns = _parse(argv)
        except SystemExit as exc:  # argparse usage errors, --help, --version
            return int(exc.code or 0)
        if ns.command == "corpus":
            if ns.action == "list":
                for e in builtin_corpus():
                    print(f"{e.name:<16s} {e.mode.value:<6s} expected={e.expected_verdict}")
                return 0
            if not ns.name:
                raise ConfigInvalid("corpus describe needs a name", field="name")
            try:
                print(json_text(get_entry(ns.name).describe()), end="")
            except KeyError:
                raise InputNotFound(f"no corpus entry named {ns.name!r}", field="name") from None
            return 0
        if ns.command == "validate-trial":
            try:
                phi = trial_from_name(ns.phi)
            except ValueError as exc:
                raise ConfigInvalid(f"phi: {exc}", field="phi") from None
            report = validate_class(phi)
            print(json.dumps(report.to_dict(), indent=2))
            return 0 if report.passed else 1
        cfg = _run_config(ns)
        runner = {"analyze": analyze, "fourier": fourier_analysis, "spaces": spaces_analysis}[ns.command]
        res = runner(cfg)
        _write_outputs(res, ns.out)
        print(_summary(res))
        return res.exit_code
    except ConfigInvalid as exc:
        return _error_exit(exc, EXIT_CONFIG)
    except InputNotFound as exc:
        return _error_exit(exc, EXIT_INPUT)
    except DiagnosticError as exc:
        return _error_exit(exc, EXIT_ERROR)
    except (ValueError, KeyError) as exc:
        print(json_text({"error": "ERROR", "message": str(exc)}), file=sys.stderr, end="")
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
