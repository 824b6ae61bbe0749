"""JSON config -> library objects. Every failure raises ConfigError with a field path."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from .markov import ChainSpec, PathEvent
from .measures import (
    DEFAULT_DIGITS,
    AtomicMeasure,
    IncrementLaw,
    TransitionKernel,
    discrete_laplace,
    kernel_from_increments,
    lazy_srw,
    power_law,
)
from .processes import LevyTriplet, bessel_kernel


class ConfigError(ValueError):
    pass


def load_json(path: str | Path) -> Any:
    text = Path(path).read_text() if str(path) != "-" else __import__("sys").stdin.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e


def _get(doc: Mapping, key: str, where: str):
    if not isinstance(doc, Mapping):
        raise ConfigError(f"{where}: expected an object, got {type(doc).__name__}")
    if key not in doc:
        raise ConfigError(f"{where}: missing field {key!r}")
    return doc[key]


def _wrap(where: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, ArithmeticError) as e:
        raise ConfigError(f"{where}: {e}") from e


def build_law(doc: Mapping, digits: int = DEFAULT_DIGITS, where: str = "law") -> IncrementLaw:
    if isinstance(doc, Mapping) and "atoms" in doc:
        return _wrap(where, IncrementLaw.from_json, doc)
    fam = _get(doc, "family", where)
    if fam == "lazy_srw":
        return _wrap(where, lazy_srw, str(doc.get("gamma", 0)))
    if fam == "srw":
        return lazy_srw(0)
    if fam == "discrete_laplace":
        return _wrap(where, discrete_laplace, _get(doc, "beta", where), int(_get(doc, "K", where)), digits)
    if fam == "power_law":
        return _wrap(where, power_law, _get(doc, "alpha", where), int(_get(doc, "K", where)), digits)
    if fam == "custom":
        pmf = _get(doc, "pmf", where)
        return _wrap(where, IncrementLaw.from_weights, {int(k): str(v) for k, v in pmf.items()})
    raise ConfigError(f"{where}.family: unknown family {fam!r}")


def build_kernel(doc: Mapping, digits: int = DEFAULT_DIGITS, where: str = "kernel") -> TransitionKernel:
    if isinstance(doc, Mapping) and "rows" in doc:
        return _wrap(where, TransitionKernel.from_json, doc)
    if isinstance(doc, Mapping) and doc.get("family") == "bessel":
        return _wrap(where, bessel_kernel, str(_get(doc, "nu", where)), int(_get(doc, "M", where)))
    law = build_law(_get(doc, "increments", where), digits, where + ".increments")
    lo, hi = _get(doc, "window", where)
    return _wrap(where, kernel_from_increments, law, (int(lo), int(hi)))


def build_chain(doc: Mapping, digits: int = DEFAULT_DIGITS, where: str = "chain") -> ChainSpec:
    kernel = build_kernel(_get(doc, "kernel", where), digits, where + ".kernel")
    return _wrap(where, ChainSpec, kernel, int(doc.get("start", 0)), int(_get(doc, "n", where)))


def build_event(doc: Mapping | None, where: str = "event") -> PathEvent:
    if doc is None:
        return PathEvent.full()
    return _wrap(where, PathEvent.from_json, doc)


def build_measure(doc: Mapping, where: str = "measure") -> AtomicMeasure:
    return _wrap(where, AtomicMeasure.from_json, doc)


def build_triplet(doc: Mapping, where: str = "triplet") -> LevyTriplet:
    return _wrap(where, LevyTriplet.from_json, doc)


def build_X1(value: Any, kernel: TransitionKernel, where: str = "X1") -> list[int]:
    if value is None or value == "window":
        return list(kernel.window)
    if isinstance(value, Mapping) and "residue" in value:
        a, b = value["residue"]
        return [x for x in kernel.window if (x - int(b)) % int(a) == 0]
    if isinstance(value, list):
        return [int(x) for x in value]
    raise ConfigError(f"{where}: expected 'window', a list, or {{'residue': [a, b]}}")
