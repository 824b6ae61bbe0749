"""Command-line entry point: ``fkglab COMMAND INPUT.json [flags]``.

Exit status: 0 when a verdict was produced, 1 when an asserted property is
violated (``suite``, or any checker run with ``--assert-holds``), 2 on
input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import association as assoc
from .config import (
    ConfigError,
    build_chain,
    build_event,
    build_kernel,
    build_law,
    build_measure,
    build_triplet,
    build_X1,
    load_json,
)
from .fkg import (
    DEFAULT_M_CAP,
    DEFAULT_SUPPORT_CAP,
    check_H1,
    construct_counterexample_paths,
    fkg_lattice_condition,
    has_unfavorable_crossings,
    is_log_concave,
    support_gcd,
)
from .lattice import DEFAULT_UPSET_CAP
from .markov import (
    DEFAULT_PATH_CAP,
    GENERATOR_NAME,
    ChainSpec,
    PathEvent,
    condition_on_event,
    exact_path_law,
    make_rng,
    sample_conditioned,
    sample_with_random_start,
)
from .measures import DEFAULT_DIGITS, AtomicMeasure
from .processes import bessel_kernel, levy_check_association, sample_levy_path
from .suites import DEFAULT_SEED, SUITES, run_suite

STOCHASTIC = {"sample", "probe-assoc"}


class AssertionFailed(Exception):
    pass


def _flags_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--precision-digits", type=int, default=DEFAULT_DIGITS)
    p.add_argument("--upset-cap", type=int, default=DEFAULT_UPSET_CAP)
    p.add_argument("--path-cap", type=int, default=DEFAULT_PATH_CAP)
    p.add_argument("--support-cap", type=int, default=DEFAULT_SUPPORT_CAP)
    p.add_argument("--ci-level", type=float, default=assoc.DEFAULT_LEVEL)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--emit-plot-data", metavar="CSV", default=None)
    p.add_argument("--csv", metavar="CSV", default=None, help="sample output (sample command)")
    p.add_argument("--out", metavar="JSON", default=None, help="report path (default: stdout)")
    p.add_argument("--assert-holds", action="store_true", help="exit 1 when the verdict is negative")
    return p


def build_parser() -> argparse.ArgumentParser:
    flags = _flags_parser()
    parser = argparse.ArgumentParser(prog="fkglab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fkglab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("check-lattice", "FKG lattice condition of a measure or (conditioned) path law"),
        ("check-crossings", "unfavorable crossings of a kernel on a state set X1"),
        ("check-logconcave", "log-concavity of an increment law on its support lattice"),
        ("check-h1", "(H1) for a chain: crossings on every marginal support"),
        ("counterexample", "explicit paths violating the lattice condition"),
        ("condition", "exact conditional path law given an event"),
        ("sample", "sample a conditioned chain, Bessel chain or Levy process"),
        ("oracle-assoc", "exact association via up-set enumeration"),
        ("probe-assoc", "Monte Carlo association probe over a functional family"),
        ("levy-classify", "association classifier for a Levy triplet"),
    ]:
        sp = sub.add_parser(name, help=help_, parents=[flags])
        sp.add_argument("input", help="JSON config path ('-' for stdin)")
    sp = sub.add_parser("suite", help="run a named acceptance suite", parents=[flags])
    sp.add_argument("name", choices=list(SUITES) + ["all"])
    return parser


def _verdict(holds: bool, args) -> None:
    if args.assert_holds and not holds:
        raise AssertionFailed()


def _law_doc(doc):
    return doc.get("law", doc) if isinstance(doc, dict) else doc


def _measure_from(doc: dict, args) -> tuple[AtomicMeasure, dict]:
    """A measure given directly, or the (conditioned) path law of a chain."""
    if "atoms" in doc:
        return build_measure(doc), {}
    if "measure" in doc:
        return build_measure(doc["measure"]), {}
    chain = build_chain(doc.get("chain", doc), args.precision_digits)
    ev = doc.get("event")
    if ev is None:
        return exact_path_law(chain, args.path_cap), {"source": "path law"}
    law = condition_on_event(chain, build_event(ev))
    return law.to_measure(args.path_cap), {"source": "conditional path law", "P(A)": _frac(law.total)}


def _frac(x: Fraction) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator)}


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_check_lattice(doc, args):
    m, extra = _measure_from(doc, args)
    v = fkg_lattice_condition(m, args.support_cap)
    _verdict(v.holds, args)
    return {**v.to_json(), **extra, "support_size": len(m)}


def cmd_check_crossings(doc, args):
    kernel = build_kernel(doc["kernel"] if "kernel" in doc else doc, args.precision_digits)
    X1 = build_X1(doc.get("X1"), kernel)
    v = has_unfavorable_crossings(kernel, X1)
    _verdict(v.holds, args)
    return {**v.to_json(), "X1": X1}


def cmd_check_logconcave(doc, args):
    law = build_law(_law_doc(doc), args.precision_digits)
    v = is_log_concave(law)
    a = support_gcd(law)
    if args.emit_plot_data:
        _write_csv(args.emit_plot_data, ["x", "y"], [(z, float(p)) for z, p in law.pmf.items()])
    _verdict(v.holds, args)
    return {**v.to_json(), "a": a.a, "b": a.b, "degenerate": a.degenerate, "law": law.to_json()}


def cmd_check_h1(doc, args):
    chain = build_chain(doc.get("chain", doc), args.precision_digits)
    rep = check_H1(chain.kernel, chain.start, chain.n)
    _verdict(rep.holds, args)
    return rep.to_json()


def cmd_counterexample(doc, args):
    src = doc.get("chain", doc)
    kernel = build_kernel(src["kernel"], args.precision_digits)
    ce = construct_counterexample_paths(kernel, int(src.get("start", 0)), int(doc.get("m_cap", DEFAULT_M_CAP)))
    return ce.to_json()


def cmd_condition(doc, args):
    chain = build_chain(doc["chain"], args.precision_digits)
    event = build_event(doc.get("event"))
    law = condition_on_event(chain, event)
    return {"P(A)": _frac(law.total), "event": event.to_json(), "measure": law.to_measure(args.path_cap).to_json()}


def _need_seed(args) -> int:
    if args.seed is None:
        raise ConfigError("--seed is mandatory for stochastic commands")
    return args.seed


def build_sampler(cfg: dict, args) -> tuple[Callable, dict]:
    """``sampler(N, rng) -> array`` plus a description for the report."""
    kind = cfg.get("sampler", "conditioned")
    if kind == "conditioned":
        chain = build_chain(cfg["chain"], args.precision_digits)
        law = condition_on_event(chain, build_event(cfg.get("event")))
        base = lambda N, rng: sample_conditioned(law, rng, N)
        if "start_law" in cfg:
            start = build_measure(cfg["start_law"])
            rel = lambda x0, m, rng: sample_conditioned(law, rng, m) - chain.start
            return (lambda N, rng: sample_with_random_start(start, rel, rng, N)), {"kind": kind, "random_start": True}
        return base, {"kind": kind, "P(A)": _frac(law.total)}
    if kind == "bessel":
        n = int(cfg["n"])
        start = int(cfg.get("start", 0))
        M = int(cfg.get("M", start + n + 1))
        chain = ChainSpec(bessel_kernel(str(cfg["nu"]), M), start, n)
        law = condition_on_event(chain, PathEvent.full())
        return (lambda N, rng: sample_conditioned(law, rng, N)), {"kind": kind, "M": M}
    if kind == "levy":
        t = build_triplet(cfg["triplet"])
        T, n = float(cfg.get("T", 1.0)), int(cfg["n"])
        return (lambda N, rng: sample_levy_path(t, T, n, rng, N)), {"kind": kind, "T": T, "d": t.d}
    raise ConfigError(f"sampler: unknown kind {kind!r}")


def cmd_sample(doc, args):
    seed = _need_seed(args)
    cfg = doc["sampler"] if isinstance(doc.get("sampler"), dict) else doc
    sampler, desc = build_sampler(cfg, args)
    count = int(doc.get("count", cfg.get("count", 1000)))

    X = np.asarray(sampler(count, make_rng(seed)))
    out_csv = args.csv or (str(Path(args.out).with_suffix(".csv")) if args.out else None)
    if out_csv:
        n = X.shape[1]
        if X.ndim == 2:
            header = [f"k={k}" for k in range(1, n + 1)]
            rows = X.tolist()
        else:
            T = float(cfg.get("T", 1.0))
            header = [f"t={T * k / n:g}[{c}]" for k in range(1, n + 1) for c in range(X.shape[2])]
            rows = X.reshape(count, -1).tolist()
        _write_csv(out_csv, header, rows)
    if args.emit_plot_data:
        mean = X.mean(axis=0)
        if mean.ndim > 1:
            mean = mean[:, 0]
        _write_csv(args.emit_plot_data, ["x", "y"], [(k + 1, float(v)) for k, v in enumerate(mean)])
    return {
        **desc,
        "count": count,
        "csv": out_csv,
        "mean_terminal": np.atleast_1d(X[:, -1].mean(axis=0)).tolist(),
    }


def cmd_oracle_assoc(doc, args):
    m, extra = _measure_from(doc, args)
    v = assoc.is_associated_bruteforce(m, args.upset_cap)
    _verdict(v.holds, args)
    return {**v.to_json(), **extra, "support_size": len(m)}


def cmd_probe_assoc(doc, args):
    seed = _need_seed(args)
    sampler, desc = build_sampler(doc["sampler"], args)
    fam_cfg = doc.get("family", "standard")
    if fam_cfg == "standard":
        n = int(doc["sampler"].get("n") or doc["sampler"]["chain"]["n"])
        family = assoc.standard_family(n)
    else:
        family = [assoc.functional_from_config(f) for f in fam_cfg]
    N = int(doc.get("N", 10_000))
    res = assoc.association_probe(sampler, family, N, seed, args.ci_level)
    if args.emit_plot_data:
        _write_csv(
            args.emit_plot_data,
            ["pair", "estimate", "ci_lower", "ci_upper"],
            [(f"{r.functionals[0]}|{r.functionals[1]}", r.estimate, r.ci_lower, r.ci_upper) for r in res.reports],
        )
    _verdict(res.consistent, args)
    return {**desc, "family": [f.to_json() for f in family], **res.to_json()}


def cmd_levy_classify(doc, args):
    v = levy_check_association(build_triplet(doc.get("triplet", doc)))
    _verdict(v.associated, args)
    return v.to_json()


def cmd_suite(args):
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    results = run_suite(args.name, seed, args.threads)
    for r in results:
        print(r.line(), file=sys.stderr)
    ok = all(r.passed and r.within_budget for r in results)
    payload = []
    for r in results:
        d = r.to_json()
        d.pop("elapsed")
        payload.append(d)
    return {"passed": ok, "suites": payload}, ok


COMMANDS = {
    "check-lattice": cmd_check_lattice,
    "check-crossings": cmd_check_crossings,
    "check-logconcave": cmd_check_logconcave,
    "check-h1": cmd_check_h1,
    "counterexample": cmd_counterexample,
    "condition": cmd_condition,
    "sample": cmd_sample,
    "oracle-assoc": cmd_oracle_assoc,
    "probe-assoc": cmd_probe_assoc,
    "levy-classify": cmd_levy_classify,
}


def _echo_flags(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("command", "input", "name")}


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def _json_default(x: Any):
    if isinstance(x, Fraction):
        return _frac(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, frozenset, tuple)):
        return sorted(x) if isinstance(x, (set, frozenset)) else list(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    report: dict = {"tool": "fkglab", "version": __version__, "command": args.command}
    status = 0
    try:
        for cap in ("precision_digits", "upset_cap", "path_cap", "support_cap", "threads"):
            if getattr(args, cap) < 1:
                raise ConfigError(f"--{cap.replace('_', '-')} must be positive")
        if not 0 < args.ci_level < 1:
            raise ConfigError("--ci-level must lie in (0, 1)")
        if args.command == "suite":
            report["config"] = {"suite": args.name, "flags": _echo_flags(args)}
            report["seed"] = args.seed if args.seed is not None else DEFAULT_SEED
            result, ok = cmd_suite(args)
            status = 0 if ok else 1
        else:
            doc = load_json(args.input)
            if not isinstance(doc, dict):
                raise ConfigError(f"{args.input}: top level must be a JSON object")
            report["config"] = {"input": doc, "flags": _echo_flags(args)}
            report["seed"] = args.seed
            if args.command in STOCHASTIC:
                report["generator"] = GENERATOR_NAME
            try:
                result = COMMANDS[args.command](doc, args)
            except AssertionFailed:
                status = 1
                # rerun without the assertion to still produce the report
                args.assert_holds = False
                result = COMMANDS[args.command](doc, args)
    except (ConfigError, ValueError, KeyError, TypeError) as e:
        msg = str(e) if not isinstance(e, KeyError) else f"missing field {e}"
        print(f"fkglab: input error: {msg}", file=sys.stderr)
        return 2
    report["result"] = result
    _emit(report, args)
    return status


if __name__ == "__main__":
    sys.exit(main())
