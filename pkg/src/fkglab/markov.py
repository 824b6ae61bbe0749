"""Exact path laws of finite-window chains, conditioning on path events, sampling.

Conditioning uses a backward table ``h[k][x]``: the probability that a path at
state ``x`` after ``k`` steps finishes inside the event. The conditional chain
moves from ``x`` to ``y`` at step ``k`` with probability
``p(x, y) * h[k+1][y] / h[k][x]`` (a Doob transform).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .lattice import Point, comparable, join, meet
from .measures import AtomicMeasure, TransitionKernel, WindowExit

DEFAULT_PATH_CAP = 100_000
GENERATOR_NAME = "numpy.random.Generator(PCG64)"


class ZeroProbabilityEvent(ValueError):
    pass


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class ChainSpec:
    kernel: TransitionKernel
    start: int
    n: int

    def __post_init__(self):
        if self.start not in self.kernel:
            raise WindowExit(f"start {self.start} outside window")
        if self.n < 1:
            raise ValueError("horizon n must be >= 1")


PER_STEP_KINDS = ("full", "bridge", "excursion", "meander", "interval", "per_step")


@dataclass(frozen=True)
class PathEvent:
    """Conditioning event on the path ``(X_1, ..., X_n)``.

    Every kind except ``paths`` is a product of per-step admissible sets,
    which is what lets :func:`condition_on_event` factor through a DP.
    ``paths`` is an explicit finite path list, usable only by enumeration.
    """

    kind: str
    endpoint: int | None = None
    floor: int | None = None
    lower: tuple[int | None, ...] | None = None
    upper: tuple[int | None, ...] | None = None
    allowed: tuple[frozenset[int], ...] | None = None
    paths: frozenset[Point] | None = None

    @classmethod
    def full(cls) -> "PathEvent":
        return cls("full")

    @classmethod
    def bridge(cls, c: int = 0) -> "PathEvent":
        return cls("bridge", endpoint=c)

    @classmethod
    def excursion(cls, c: int = 0, floor: int = 0) -> "PathEvent":
        return cls("excursion", endpoint=c, floor=floor)

    @classmethod
    def meander(cls, floor: int = 0) -> "PathEvent":
        return cls("meander", floor=floor)

    @classmethod
    def interval(cls, lower: Sequence[int | None], upper: Sequence[int | None]) -> "PathEvent":
        if len(lower) != len(upper):
            raise ValueError("barrier lists differ in length")
        return cls("interval", lower=tuple(lower), upper=tuple(upper))

    @classmethod
    def from_barriers(
        cls,
        a: Callable[[float], float] | None,
        b: Callable[[float], float] | None,
        T: float,
        n: int,
        scale: float = 1.0,
    ) -> "PathEvent":
        """Sample rcll barriers at the grid times T*j/n (value at T*j/n governs step j).

        ``scale`` maps process units to lattice units, e.g. ``sqrt(n)`` for a
        diffusively rescaled walk; bounds are rounded inward to integers.
        """
        lo, hi = [], []
        for j in range(1, n + 1):
            t = T * j / n
            av = None if a is None else a(t)
            bv = None if b is None else b(t)
            lo.append(None if av is None or av == -math.inf else math.ceil(av * scale))
            hi.append(None if bv is None or bv == math.inf else math.floor(bv * scale))
        return cls.interval(lo, hi)

    @classmethod
    def per_step(cls, allowed: Sequence[Iterable[int]]) -> "PathEvent":
        return cls("per_step", allowed=tuple(frozenset(s) for s in allowed))

    @classmethod
    def explicit(cls, paths: Iterable[Iterable[int]]) -> "PathEvent":
        return cls("paths", paths=frozenset(tuple(p) for p in paths))

    @property
    def factorizes(self) -> bool:
        return self.kind in PER_STEP_KINDS

    def check_horizon(self, n: int) -> None:
        if self.kind == "interval" and len(self.lower) != n:
            raise ValueError(f"interval barriers have {len(self.lower)} steps, chain has {n}")
        if self.kind == "per_step" and len(self.allowed) != n:
            raise ValueError(f"per-step sets cover {len(self.allowed)} steps, chain has {n}")
        if self.kind == "paths" and any(len(p) != n for p in self.paths):
            raise ValueError("explicit paths must have length n")

    def admits(self, k: int, x: int, n: int) -> bool:
        """Per-step admissibility of state ``x`` at time ``k`` (1-based)."""
        kind = self.kind
        if kind == "full":
            return True
        if kind == "bridge":
            return k < n or x == self.endpoint
        if kind == "excursion":
            return x == self.endpoint if k == n else x >= self.floor
        if kind == "meander":
            return x >= self.floor
        if kind == "interval":
            lo, hi = self.lower[k - 1], self.upper[k - 1]
            return (lo is None or x >= lo) and (hi is None or x <= hi)
        if kind == "per_step":
            return x in self.allowed[k - 1]
        raise TypeError(f"event kind {kind!r} has no per-step form")

    def contains(self, path: Sequence[int]) -> bool:
        if self.kind == "paths":
            return tuple(path) in self.paths
        n = len(path)
        return all(self.admits(k, x, n) for k, x in enumerate(path, start=1))

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.endpoint is not None:
            doc["endpoint"] = self.endpoint
        if self.floor is not None:
            doc["floor"] = self.floor
        if self.lower is not None:
            doc["lower"], doc["upper"] = list(self.lower), list(self.upper)
        if self.allowed is not None:
            doc["allowed"] = [sorted(s) for s in self.allowed]
        if self.paths is not None:
            doc["paths"] = [list(p) for p in sorted(self.paths)]
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "PathEvent":
        kind = doc["kind"]
        if kind == "full":
            return cls.full()
        if kind == "bridge":
            return cls.bridge(int(doc.get("endpoint", 0)))
        if kind == "excursion":
            return cls.excursion(int(doc.get("endpoint", 0)), int(doc.get("floor", 0)))
        if kind == "meander":
            return cls.meander(int(doc.get("floor", 0)))
        if kind == "interval":
            return cls.interval(doc["lower"], doc["upper"])
        if kind == "per_step":
            return cls.per_step(doc["allowed"])
        if kind == "paths":
            return cls.explicit(doc["paths"])
        raise ValueError(f"unknown event kind {kind!r}")


def _step(kernel: TransitionKernel, states: Iterable[int]) -> set[int]:
    out: set[int] = set()
    for x in states:
        out.update(kernel.row(x))
    return out


def _require_window(kernel: TransitionKernel, states: Iterable[int], k: int) -> None:
    bad = [x for x in states if x not in kernel]
    if bad:
        raise WindowExit(
            f"step {k}: states {sorted(bad)[:5]} leave window [{kernel.lo}, {kernel.hi}]"
        )


def marginal_supports(chain: ChainSpec) -> list[set[int]]:
    """Supports of X_1, ..., X_n (positive-probability states), by forward propagation."""
    out = []
    cur = {chain.start}
    for k in range(1, chain.n + 1):
        cur = _step(chain.kernel, cur)
        _require_window(chain.kernel, cur, k)
        out.append(cur)
    return out


def path_probability(kernel: TransitionKernel, start: int, path: Sequence[int]) -> Fraction:
    """Product of kernel entries along ``start -> path[0] -> ... -> path[-1]``."""
    prob = Fraction(1)
    x = start
    for y in path:
        if x not in kernel:
            return Fraction(0)
        prob *= kernel.rows[x].get(y, 0)
        if not prob:
            return prob
        x = y
    return prob


def _enumerate_paths(kernel, start, n, admits, cap):
    paths: dict[Point, Fraction] = {}
    stack = [((), start, Fraction(1))]
    while stack:
        prefix, x, w = stack.pop()
        k = len(prefix) + 1
        for y, p in kernel.row(x).items():
            if not admits(k, y):
                continue
            if y not in kernel:
                raise WindowExit(f"step {k}: state {y} leaves window [{kernel.lo}, {kernel.hi}]")
            path = prefix + (y,)
            if k == n:
                paths[path] = w * p
                if len(paths) > cap:
                    raise CapExceeded(f"more than {cap} paths")
            else:
                stack.append((path, y, w * p))
    return paths


def exact_path_law(chain: ChainSpec, cap: int = DEFAULT_PATH_CAP) -> AtomicMeasure:
    paths = _enumerate_paths(chain.kernel, chain.start, chain.n, lambda k, y: True, cap)
    return AtomicMeasure(paths)


def condition_by_enumeration(
    chain: ChainSpec, event: PathEvent, cap: int = DEFAULT_PATH_CAP
) -> AtomicMeasure:
    """Enumerate the full path law, keep the event, renormalize (the DP's oracle)."""
    event.check_horizon(chain.n)
    law = exact_path_law(chain, cap)
    kept = {p: w for p, w in law.atoms.items() if event.contains(p)}
    total = sum(kept.values(), Fraction(0))
    if not total:
        raise ZeroProbabilityEvent("event has probability zero under the chain")
    return AtomicMeasure({p: w / total for p, w in kept.items()})


@dataclass(frozen=True)
class ConditionedPathLaw:
    """Exact conditional law of a chain given a per-step event.

    ``h[k]`` maps each admissible state reachable at time ``k`` to the
    probability of completing the event from there; ``h[0][start] == total``.
    """

    chain: ChainSpec
    event: PathEvent
    h: tuple[Mapping[int, Fraction], ...]
    total: Fraction
    _tables: list = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.chain.n

    def transition(self, k: int, x: int) -> dict[int, Fraction]:
        """Conditional law of X_{k+1} given X_k = x (k = 0..n-1)."""
        hx = self.h[k].get(x, Fraction(0))
        if not hx:
            raise ValueError(f"state {x} at time {k} has zero conditional probability")
        nxt = self.h[k + 1]
        row = self.chain.kernel.row(x)
        return {y: p * nxt[y] / hx for y, p in row.items() if nxt.get(y)}

    def probability(self, path: Sequence[int]) -> Fraction:
        if len(path) != self.n or not self.event.contains(path):
            return Fraction(0)
        return path_probability(self.chain.kernel, self.chain.start, path) / self.total

    def to_measure(self, cap: int = DEFAULT_PATH_CAP) -> AtomicMeasure:
        out: dict[Point, Fraction] = {}
        stack = [((), self.chain.start, Fraction(1))]
        while stack:
            prefix, x, w = stack.pop()
            k = len(prefix)
            for y, q in self.transition(k, x).items():
                path = prefix + (y,)
                if k + 1 == self.n:
                    out[path] = w * q
                    if len(out) > cap:
                        raise CapExceeded(f"more than {cap} paths")
                else:
                    stack.append((path, y, w * q))
        return AtomicMeasure(out)

    def float_tables(self):
        """Per step: (sorted states, sorted targets, cumulative probability matrix)."""
        if self._tables is None:
            tables = []
            for k in range(self.n):
                states = np.array(sorted(x for x, v in self.h[k].items() if v), dtype=np.int64)
                targets = np.array(sorted(y for y, v in self.h[k + 1].items() if v), dtype=np.int64)
                col = {int(y): j for j, y in enumerate(targets)}
                cum = np.zeros((len(states), len(targets)))
                for i, x in enumerate(states):
                    for y, q in self.transition(k, int(x)).items():
                        cum[i, col[y]] = float(q)
                cum = np.cumsum(cum, axis=1)
                cum[:, -1] = 1.0
                tables.append((states, targets, cum))
            object.__setattr__(self, "_tables", tables)
        return self._tables


def condition_on_event(chain: ChainSpec, event: PathEvent) -> ConditionedPathLaw:
    if not event.factorizes:
        raise TypeError("explicit path-set events do not factor; use condition_by_enumeration")
    event.check_horizon(chain.n)
    kernel, n = chain.kernel, chain.n
    reach: list[set[int]] = [{chain.start}]
    for k in range(1, n + 1):
        nxt = {y for y in _step(kernel, reach[-1]) if event.admits(k, y, n)}
        _require_window(kernel, nxt, k)
        reach.append(nxt)
    h: list[dict[int, Fraction]] = [dict() for _ in range(n + 1)]
    h[n] = {y: Fraction(1) for y in reach[n]}
    for k in range(n - 1, -1, -1):
        nxt = h[k + 1]
        h[k] = {
            x: sum((p * nxt[y] for y, p in kernel.row(x).items() if y in nxt), Fraction(0))
            for x in reach[k]
        }
    total = h[0][chain.start]
    if not total:
        msg = "event has probability zero under the chain"
        if event.kind in ("bridge", "excursion"):
            ends = _step_all(kernel, chain.start, n)
            if event.endpoint not in ends:
                msg += f" (endpoint {event.endpoint} unreachable in {n} steps, e.g. a parity obstruction)"
        raise ZeroProbabilityEvent(msg)
    return ConditionedPathLaw(chain, event, tuple(h), total)


def _step_all(kernel, start, n):
    cur = {start}
    for _ in range(n):
        cur = {y for x in cur if x in kernel for y in kernel.rows[x]}
    return cur


def event_maxmin_stable(
    event: PathEvent, chain: ChainSpec, enumerate_paths: bool = True, cap: int = DEFAULT_PATH_CAP
) -> bool:
    """Join/meet closure of the event.

    Per-step product events are stable by construction (max and min of two
    integers is one of them). When ``enumerate_paths`` is set the closure is
    also checked directly over the event's positive-probability paths, and
    the two answers must agree.
    """
    event.check_horizon(chain.n)
    certificate = True if event.factorizes else None
    if not enumerate_paths and certificate is not None:
        return certificate
    law = exact_path_law(chain, cap)
    inside = [p for p in law.atoms if event.contains(p)]
    ok = all(
        comparable(u, v) or (event.contains(join(u, v)) and event.contains(meet(u, v)))
        for i, u in enumerate(inside)
        for v in inside[i + 1 :]
    )
    if certificate is not None and certificate != ok:
        raise AssertionError("enumerated closure disagrees with the per-step certificate")
    return ok


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_conditioned(law: ConditionedPathLaw, seed, count: int, chunk: int = 20_000) -> np.ndarray:
    """``count`` exact samples, shape (count, n). One uniform per step per path:
    path i at step k consumes ``U[i, k]`` of a single (count, n) uniform draw."""
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    n = law.n
    U = rng.random((count, n))
    out = np.empty((count, n), dtype=np.int64)
    tables = law.float_tables()
    for s in range(0, count, chunk):
        e = min(count, s + chunk)
        x = np.full(e - s, law.chain.start, dtype=np.int64)
        for k, (states, targets, cum) in enumerate(tables):
            rows = np.searchsorted(states, x)
            idx = (cum[rows] <= U[s:e, k, None]).sum(axis=1)
            x = targets[np.minimum(idx, len(targets) - 1)]
            out[s:e, k] = x
    return out


def sample_with_random_start(
    start_law: AtomicMeasure,
    conditional_sampler: Callable[[Point, int, np.random.Generator], np.ndarray],
    seed,
    count: int,
) -> np.ndarray:
    """Samples of ``Y + X_0``: X_0 ~ ``start_law``, then Y drawn given X_0.

    ``conditional_sampler(x0, m, rng)`` returns ``m`` paths of Y given X_0 = x0.
    A point-mass start draws no start variates, so the output coincides with
    ``conditional_sampler(x0, count, rng)`` for the same seed.
    """
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    if conditional_sampler is None:
        raise ValueError("missing per-start sampler")
    atoms = list(start_law.atoms.items())
    pts = [p for p, _ in atoms]
    if len(atoms) == 1:
        labels = np.zeros(count, dtype=np.int64)
    else:
        cdf = np.cumsum([float(w) for _, w in atoms])
        cdf[-1] = 1.0
        labels = np.searchsorted(cdf, rng.random(count), side="right")
    out = None
    for i, x0 in enumerate(pts):
        where = np.flatnonzero(labels == i)
        if not len(where):
            continue
        y = np.asarray(conditional_sampler(x0, len(where), rng))
        shift = np.asarray(x0 if start_law.dimension > 1 else x0[0])
        y = y + shift
        if out is None:
            out = np.empty((count,) + y.shape[1:], dtype=y.dtype)
        out[where] = y
    return out
