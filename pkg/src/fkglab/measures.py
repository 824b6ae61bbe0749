"""Exact atomic measures, increment laws and transition kernels on integer lattices.

All weights are :class:`fractions.Fraction`. Irrational weights (Laplace and
power-law families) are rounded to a rational at ``digits`` significant
decimal digits *before* normalization, and the rounded object is treated as
the ground truth by every checker downstream.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping

import mpmath

from .lattice import Point, as_point

DEFAULT_DIGITS = 30

_MP_NAMES = {
    name: getattr(mpmath, name)
    for name in ("log", "exp", "sqrt", "pi", "e", "ln", "mpf")
}


_EXPR_OK = re.compile(r"[0-9a-z().+\-*/ ]+")


class MeasureError(ValueError):
    pass


def to_fraction(x: Any) -> Fraction:
    """Exact conversion: ints, Fractions, decimal/ratio strings, floats (bit-exact)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a weight")
    if isinstance(x, (int, float, str)):
        return Fraction(x)
    if isinstance(x, Mapping) and "num" in x and "den" in x:
        return Fraction(int(x["num"]), int(x["den"]))
    raise TypeError(f"cannot read {x!r} as an exact rational")


def _mp_eval(x: Any, dps: int) -> mpmath.mpf:
    """Evaluate a real parameter at working precision.

    Strings may name a closed form, e.g. ``"log(2)"``, so that ``exp(-beta)``
    is exact to ``dps`` digits rather than to float precision.
    """
    with mpmath.workdps(dps):
        if isinstance(x, str):
            try:
                return mpmath.mpf(x)
            except (ValueError, TypeError):
                if not _EXPR_OK.fullmatch(x):
                    raise MeasureError(f"unsupported parameter expression {x!r}")
                try:
                    return mpmath.mpf(eval(x, {"__builtins__": {}}, _MP_NAMES))
                except (NameError, SyntaxError, TypeError, ZeroDivisionError) as e:
                    raise MeasureError(f"cannot evaluate {x!r}: {e}") from e
        if isinstance(x, Fraction):
            return mpmath.mpf(x.numerator) / x.denominator
        return mpmath.mpf(x)


def _round_sig(value: mpmath.mpf, digits: int) -> Fraction:
    with mpmath.workdps(digits + 20):
        s = mpmath.nstr(value, digits, min_fixed=-math.inf, max_fixed=math.inf)
    return Fraction(s)


def _normalize(weights: Mapping[Any, Fraction]) -> dict[Any, Fraction]:
    total = sum(weights.values(), Fraction(0))
    if total <= 0:
        raise MeasureError("weights sum to zero")
    return {k: w / total for k, w in weights.items() if w != 0}


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely supported probability measure on Z^dimension with exact weights."""

    atoms: Mapping[Point, Fraction]
    dimension: int

    def __init__(self, atoms: Mapping[Iterable[int], Any], dimension: int | None = None):
        clean: dict[Point, Fraction] = {}
        for pt, w in atoms.items():
            p = as_point(pt)
            fw = to_fraction(w)
            if fw < 0:
                raise MeasureError(f"negative weight at {p}")
            if fw:
                clean[p] = clean.get(p, Fraction(0)) + fw
        if not clean:
            raise MeasureError("empty measure")
        dims = {len(p) for p in clean}
        if len(dims) != 1:
            raise MeasureError("mixed dimensions")
        d = dims.pop()
        if dimension is not None and dimension != d:
            raise MeasureError(f"declared dimension {dimension}, atoms have {d}")
        if sum(clean.values()) != 1:
            raise MeasureError(f"weights sum to {sum(clean.values())}, not 1")
        object.__setattr__(self, "atoms", dict(sorted(clean.items())))
        object.__setattr__(self, "dimension", d)

    @classmethod
    def from_weights(cls, weights: Mapping[Iterable[int], Any]) -> "AtomicMeasure":
        """Build from unnormalized nonnegative weights."""
        return cls(_normalize({as_point(k): to_fraction(v) for k, v in weights.items()}))

    def __call__(self, u: Iterable[int]) -> Fraction:
        return self.atoms.get(tuple(u), Fraction(0))

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def support(self) -> list[Point]:
        return list(self.atoms)

    def pushforward(self, fn) -> "AtomicMeasure":
        out: dict[Point, Fraction] = {}
        for p, w in self.atoms.items():
            q = as_point(fn(p))
            out[q] = out.get(q, Fraction(0)) + w
        return AtomicMeasure(out)

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "atoms": [
                {"point": list(p), "num": str(w.numerator), "den": str(w.denominator)}
                for p, w in self.atoms.items()
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "AtomicMeasure":
        atoms = {tuple(a["point"]): Fraction(int(a["num"]), int(a["den"])) for a in doc["atoms"]}
        return cls(atoms, doc.get("dimension"))


def product_measure(*factors: AtomicMeasure) -> AtomicMeasure:
    out: dict[Point, Fraction] = {(): Fraction(1)}
    for m in factors:
        out = {p + q: w * v for p, w in out.items() for q, v in m.atoms.items()}
    return AtomicMeasure(out)


def support_arithmetic(support: Iterable[int]) -> tuple[int, int, bool]:
    """(a, b, degenerate) with Supp in aZ+b and a maximal; b in [0, a)."""
    pts = sorted(set(support))
    if not pts:
        raise MeasureError("empty support")
    if len(pts) == 1:
        return 1, pts[0], True
    a = 0
    for w in pts[1:]:
        a = math.gcd(a, w - pts[0])
    return a, pts[0] % a, False


@dataclass(frozen=True)
class IncrementLaw:
    """Finitely supported law on Z, with support arithmetic (a, b)."""

    pmf: Mapping[int, Fraction]
    a: int = field(init=False)
    b: int = field(init=False)
    degenerate: bool = field(init=False)
    note: str = ""

    def __init__(self, pmf: Mapping[int, Any], note: str = ""):
        clean = {int(k): to_fraction(v) for k, v in pmf.items()}
        if any(v < 0 for v in clean.values()):
            raise MeasureError("negative weight")
        clean = {k: v for k, v in sorted(clean.items()) if v}
        if not clean:
            raise MeasureError("empty support")
        if sum(clean.values()) != 1:
            raise MeasureError(f"weights sum to {sum(clean.values())}, not 1")
        a, b, deg = support_arithmetic(clean)
        if not deg:
            assert all((w - b) % a == 0 for w in clean)
        object.__setattr__(self, "pmf", clean)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "degenerate", deg)
        object.__setattr__(self, "note", note)

    @classmethod
    def from_weights(cls, weights: Mapping[int, Any], note: str = "") -> "IncrementLaw":
        return cls(_normalize({int(k): to_fraction(v) for k, v in weights.items()}), note)

    def __call__(self, z: int) -> Fraction:
        return self.pmf.get(z, Fraction(0))

    @property
    def support(self) -> list[int]:
        return list(self.pmf)

    def as_measure(self) -> AtomicMeasure:
        return AtomicMeasure({(k,): v for k, v in self.pmf.items()})

    def to_json(self) -> dict:
        doc = self.as_measure().to_json()
        if self.note:
            doc["note"] = self.note
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "IncrementLaw":
        m = AtomicMeasure.from_json(doc)
        if m.dimension != 1:
            raise MeasureError("increment laws are one-dimensional")
        return cls({p[0]: w for p, w in m.atoms.items()}, doc.get("note", ""))


def discrete_laplace(beta: Any, K: int, digits: int = DEFAULT_DIGITS) -> IncrementLaw:
    """Weights proportional to exp(-beta|z|) on {-K..K}, exactly renormalized.

    ``r = exp(-beta)`` is rounded to ``digits`` significant digits first; pass
    ``beta="log(2)"`` to get r = 1/2 exactly.
    """
    if K < 1:
        raise MeasureError("truncation K must be >= 1")
    with mpmath.workdps(digits + 20):
        b = _mp_eval(beta, digits + 20)
        if b <= 0:
            raise MeasureError("beta must be positive")
        r = _round_sig(mpmath.exp(-b), digits)
    law = IncrementLaw.from_weights({z: r ** abs(z) for z in range(-K, K + 1)},
                                    note=f"truncated at K={K}; normalizing constant is the truncated one")
    return law


def lazy_srw(gamma: Any) -> IncrementLaw:
    g = to_fraction(gamma)
    if not 0 <= g <= 1:
        raise MeasureError("gamma must lie in [0, 1]")
    half = (1 - g) / 2
    return IncrementLaw({-1: half, 0: g, 1: half})


def power_law(alpha: Any, K: int, digits: int = DEFAULT_DIGITS) -> IncrementLaw:
    """Weights proportional to (1+|z|)^(-alpha) on {-K..K}."""
    if K < 2:
        raise MeasureError("truncation K must be >= 2 to witness non-log-concavity")
    try:
        al = to_fraction(alpha)
    except (TypeError, ValueError):
        al = None
    if al is not None and al.denominator == 1:
        if al <= 1:
            raise MeasureError("alpha must exceed 1")
        weights = {z: Fraction(1, (1 + abs(z)) ** al.numerator) for z in range(-K, K + 1)}
    else:
        with mpmath.workdps(digits + 20):
            am = _mp_eval(alpha, digits + 20)
            if am <= 1:
                raise MeasureError("alpha must exceed 1")
            weights = {
                z: _round_sig(mpmath.power(1 + abs(z), -am), digits) for z in range(-K, K + 1)
            }
    return IncrementLaw.from_weights(
        weights, note=f"truncated at K={K}; normalizing constant is the truncated one"
    )


class WindowExit(ValueError):
    """A chain left the finite window its kernel is defined on."""


@dataclass(frozen=True)
class TransitionKernel:
    """Rows ``x -> {y: p_xy}`` for every x in the integer window ``[lo, hi]``.

    Targets may fall outside the window; whoever propagates the chain decides
    what an exit means (the default everywhere in this package is an error).
    """

    lo: int
    hi: int
    rows: Mapping[int, Mapping[int, Fraction]]

    def __init__(self, window: tuple[int, int], rows: Mapping[int, Mapping[int, Any]]):
        lo, hi = int(window[0]), int(window[1])
        if lo > hi:
            raise MeasureError("empty window")
        clean = {}
        for x in range(lo, hi + 1):
            if x not in rows:
                raise MeasureError(f"missing row for state {x}")
            row = {int(y): to_fraction(p) for y, p in rows[x].items()}
            if any(p < 0 for p in row.values()):
                raise MeasureError(f"negative entry in row {x}")
            row = {y: p for y, p in sorted(row.items()) if p}
            if sum(row.values()) != 1:
                raise MeasureError(f"row {x} sums to {sum(row.values())}")
            clean[x] = row
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "rows", clean)

    @property
    def window(self) -> range:
        return range(self.lo, self.hi + 1)

    def __contains__(self, x: int) -> bool:
        return self.lo <= x <= self.hi

    def p(self, x: int, y: int) -> Fraction:
        row = self.rows.get(x)
        if row is None:
            raise WindowExit(f"state {x} outside window [{self.lo}, {self.hi}]")
        return row.get(y, Fraction(0))

    def row(self, x: int) -> Mapping[int, Fraction]:
        if x not in self.rows:
            raise WindowExit(f"state {x} outside window [{self.lo}, {self.hi}]")
        return self.rows[x]

    def to_json(self) -> dict:
        return {
            "window": [self.lo, self.hi],
            "rows": [
                {
                    "from": x,
                    "to": [
                        {"state": y, "num": str(p.numerator), "den": str(p.denominator)}
                        for y, p in row.items()
                    ],
                }
                for x, row in self.rows.items()
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "TransitionKernel":
        rows = {
            int(r["from"]): {int(t["state"]): Fraction(int(t["num"]), int(t["den"])) for t in r["to"]}
            for r in doc["rows"]
        }
        return cls(tuple(doc["window"]), rows)


def kernel_from_increments(law: IncrementLaw, window: tuple[int, int]) -> TransitionKernel:
    lo, hi = window
    if lo > hi:
        raise MeasureError("empty window")
    return TransitionKernel((lo, hi), {x: {x + z: p for z, p in law.pmf.items()} for x in range(lo, hi + 1)})
