"""Exact checks: FKG lattice condition, unfavorable crossings, log-concavity.

Nothing here uses a tolerance. Weights are rescaled to integers by a common
denominator and compared by cross-multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .lattice import CapExceeded, Point
from .markov import ChainSpec, marginal_supports, path_probability
from .measures import AtomicMeasure, IncrementLaw, TransitionKernel, WindowExit, support_arithmetic

DEFAULT_SUPPORT_CAP = 5000
DEFAULT_M_CAP = 64

_INT64_SAFE = 1 << 62


class PreconditionError(ValueError):
    pass


def _frac_json(x: Fraction) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator)}


@dataclass(frozen=True)
class LatticeConditionVerdict:
    holds: bool
    witness: dict | None = None
    scanned: int = 0

    def to_json(self) -> dict:
        w = None
        if self.witness is not None:
            w = {
                k: (list(v) if isinstance(v, tuple) else _frac_json(v))
                for k, v in self.witness.items()
            }
        return {"holds": self.holds, "witness": w, "scanned": self.scanned}


@dataclass(frozen=True)
class CrossingsVerdict:
    holds: bool
    witness: dict | None = None
    scanned: int = 0

    def to_json(self) -> dict:
        w = None
        if self.witness is not None:
            w = {k: (_frac_json(v) if isinstance(v, Fraction) else v) for k, v in self.witness.items()}
        return {"holds": self.holds, "witness": w, "scanned": self.scanned}


@dataclass(frozen=True)
class LogConcavityVerdict:
    holds: bool
    witness: tuple[int, int, int] | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.holds

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "witness": None if self.witness is None else list(self.witness),
            "reason": self.reason,
        }


def _integer_weights(weights: Sequence[Fraction]) -> tuple[list[int], int]:
    den = 1
    for w in weights:
        den = den * w.denominator // math.gcd(den, w.denominator)
    return [w.numerator * (den // w.denominator) for w in weights], den


def fkg_lattice_condition(m: AtomicMeasure, cap: int = DEFAULT_SUPPORT_CAP) -> LatticeConditionVerdict:
    """Check P(u v v) P(u ^ v) >= P(u) P(v) over all pairs of support points.

    Comparable pairs are skipped. The first failing pair in lexicographic
    order is returned as the witness.
    """
    pts = list(m.atoms)
    N = len(pts)
    if N > cap:
        raise CapExceeded(f"support has {N} atoms, cap is {cap}")
    if N < 2 or m.dimension == 1:
        return LatticeConditionVerdict(True, None, N * (N - 1) // 2)
    ints, _ = _integer_weights(list(m.atoms.values()))
    A = np.array(pts, dtype=np.int64)
    use_int64 = max(ints) ** 2 < _INT64_SAFE
    w = np.array(ints, dtype=np.int64 if use_int64 else object)
    lows = A.min(axis=0)
    span = A.max(axis=0) - lows + 1
    if math.prod(int(s) for s in span) >= _INT64_SAFE:
        return _lattice_scan_slow(m)
    strides = np.cumprod(np.concatenate(([1], span[1:][::-1])))[::-1].astype(np.int64)
    keys = (A - lows) @ strides
    order = np.argsort(keys)
    skeys = keys[order]
    zero = w.dtype.type(0) if use_int64 else 0

    def lookup(B):
        k = (B - lows) @ strides
        pos = np.searchsorted(skeys, k)
        pos = np.minimum(pos, N - 1)
        hit = skeys[pos] == k
        out = np.where(hit, w[order[pos]], zero)
        return out

    scanned = 0
    for i in range(N - 1):
        u = A[i]
        V = A[i + 1 :]
        le = (V >= u).all(axis=1)
        ge = (V <= u).all(axis=1)
        inc = ~(le | ge)
        scanned += len(V)
        if not inc.any():
            continue
        js = np.flatnonzero(inc) + i + 1
        Vi = A[js]
        J = np.maximum(Vi, u)
        M = np.minimum(Vi, u)
        lhs = lookup(J) * lookup(M)
        rhs = w[i] * w[js]
        bad = np.flatnonzero(lhs < rhs)
        if len(bad):
            j = int(js[bad[0]])
            return LatticeConditionVerdict(False, _lattice_witness(m, pts[i], pts[j]), scanned)
    return LatticeConditionVerdict(True, None, scanned)


def _lattice_witness(m: AtomicMeasure, u: Point, v: Point) -> dict:
    j = tuple(max(a, b) for a, b in zip(u, v))
    mt = tuple(min(a, b) for a, b in zip(u, v))
    return {"u": u, "v": v, "P(u)": m(u), "P(v)": m(v), "P(join)": m(j), "P(meet)": m(mt)}


def _lattice_scan_slow(m: AtomicMeasure) -> LatticeConditionVerdict:
    pts = list(m.atoms)
    scanned = 0
    for i, u in enumerate(pts):
        for v in pts[i + 1 :]:
            scanned += 1
            j = tuple(max(a, b) for a, b in zip(u, v))
            if j == u or j == v:
                continue
            mt = tuple(min(a, b) for a, b in zip(u, v))
            if m(j) * m(mt) < m(u) * m(v):
                return LatticeConditionVerdict(False, _lattice_witness(m, u, v), scanned)
    return LatticeConditionVerdict(True, None, scanned)


def has_unfavorable_crossings(kernel: TransitionKernel, X1: Iterable[int]) -> CrossingsVerdict:
    """Check p(u1,u2) p(v1,v2) <= p(u1 v v1, u2 v v2) p(u1 ^ v1, u2 ^ v2) for u1, v1 in X1.

    Only crossing quadruples (u1 < v1, u2 > v2) can fail. The left side is
    nonzero only for u2, v2 in the supports of rows u1, v1, so only those
    are scanned.
    """
    xs = sorted(set(X1))
    outside = [x for x in xs if x not in kernel]
    if outside:
        raise WindowExit(f"X1 states {outside[:5]} outside window [{kernel.lo}, {kernel.hi}]")
    scanned = 0
    for i, u1 in enumerate(xs):
        ru = kernel.rows[u1]
        for v1 in xs[i + 1 :]:
            rv = kernel.rows[v1]
            for u2, pu in ru.items():
                for v2, pv in rv.items():
                    if v2 >= u2:
                        break
                    scanned += 1
                    lhs = pu * pv
                    rhs = rv.get(u2, 0) * ru.get(v2, 0)
                    if lhs > rhs:
                        return CrossingsVerdict(
                            False,
                            {"u1": u1, "u2": u2, "v1": v1, "v2": v2, "lhs": lhs, "rhs": Fraction(rhs)},
                            scanned,
                        )
    return CrossingsVerdict(True, None, scanned)


def residue_class(a: int, b: int, lo: int, hi: int) -> list[int]:
    return [x for x in range(lo, hi + 1) if (x - b) % a == 0]


class SupportArithmetic(NamedTuple):
    a: int
    b: int
    degenerate: bool = False


def support_gcd(law: IncrementLaw) -> SupportArithmetic:
    return SupportArithmetic(*support_arithmetic(law.support))


def is_log_concave(law: IncrementLaw) -> LogConcavityVerdict:
    """Log-concavity of k -> p_k along the support lattice aZ+b.

    A zero strictly between two positive atoms of aZ+b fails (the witness
    is then: last atom before the gap, first hole, next atom).
    """
    a = law.a
    sup = law.support
    if len(sup) < 3:
        return LogConcavityVerdict(True)
    grid = range(sup[0], sup[-1] + 1, a)
    for w in grid:
        if not law(w):
            left = max(x for x in sup if x < w)
            right = min(x for x in sup if x > w)
            return LogConcavityVerdict(False, (left, w, right), "interior gap")
    for w in grid[1:-1]:
        if law(w) ** 2 < law(w - a) * law(w + a):
            return LogConcavityVerdict(False, (w - a, w, w + a), "ratio")
    return LogConcavityVerdict(True)


@dataclass(frozen=True)
class H1Report:
    holds: bool
    steps: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.holds

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "steps": [
                {"k": k, "support": sorted(s), "verdict": v.to_json()} for k, s, v in self.steps
            ],
        }


def step_supports(kernel: TransitionKernel, start: int, n: int) -> list[set[int]]:
    """Supp(X_0), ..., Supp(X_{n-1})."""
    if n == 1:
        return [{start}]
    return [{start}] + marginal_supports(ChainSpec(kernel, start, n - 1))


def check_H1(kernel: TransitionKernel, start: int, n: int) -> H1Report:
    steps = []
    ok = True
    for k, sup in enumerate(step_supports(kernel, start, n)):
        v = has_unfavorable_crossings(kernel, sup)
        steps.append((k, sup, v))
        ok = ok and v.holds
    return H1Report(ok, steps)


@dataclass(frozen=True)
class Counterexample:
    u: Point
    v: Point
    ratio: Fraction
    m: int
    k0: int
    crossing: dict

    def to_json(self) -> dict:
        return {
            "u": list(self.u),
            "v": list(self.v),
            "ratio": _frac_json(self.ratio),
            "m": self.m,
            "k0": self.k0,
            "crossing": {k: (_frac_json(x) if isinstance(x, Fraction) else x) for k, x in self.crossing.items()},
        }


def _prefix_to(kernel: TransitionKernel, supports: list[set[int]], target: int) -> list[int]:
    """A positive-probability path X_1..X_k ending at ``target`` (k = len(supports)-1)."""
    path = [target]
    for k in range(len(supports) - 2, -1, -1):
        y = path[-1]
        x = min(x for x in supports[k] if kernel.rows[x].get(y))
        path.append(x)
    path.reverse()
    return path[1:]


def construct_counterexample_paths(
    kernel: TransitionKernel, start: int, m_cap: int = DEFAULT_M_CAP
) -> Counterexample:
    """Two paths violating the lattice condition, built from a crossing failure.

    Finds the first time k0 at which the kernel fails Supp(X_k0)-crossings,
    reaches the two witness states by positive-probability prefixes, then
    extends both paths by swapping the two witness increments at every step,
    so that each later step is again a crossing. Returns the shortest length
    m <= m_cap whose join/meet ratio is below 1.
    """
    supports = [{start}]
    k0 = None
    witness = None
    try:
        for k in range(m_cap):
            v = has_unfavorable_crossings(kernel, supports[k])
            if not v.holds:
                k0, witness = k, v.witness
                break
            nxt = set()
            for x in supports[k]:
                nxt.update(kernel.rows[x])
            if any(y not in kernel for y in nxt):
                break
            supports.append(nxt)
    except WindowExit:
        pass
    if witness is None:
        raise PreconditionError("kernel shows no crossing failure on reachable supports")
    u1, u2, v1, v2 = witness["u1"], witness["u2"], witness["v1"], witness["v2"]
    du, dv = u2 - u1, v2 - v1
    u = _prefix_to(kernel, supports[: k0 + 1], u1) if k0 else []
    v = _prefix_to(kernel, supports[: k0 + 1], v1) if k0 else []
    u.append(u2)
    v.append(v2)
    m = k0 + 1
    while True:
        j = tuple(max(a, b) for a, b in zip(u, v))
        mt = tuple(min(a, b) for a, b in zip(u, v))
        pu = path_probability(kernel, start, u)
        pv = path_probability(kernel, start, v)
        if not pu or not pv:
            raise PreconditionError(f"alternating extension has zero probability at m={m}")
        ratio = path_probability(kernel, start, j) * path_probability(kernel, start, mt) / (pu * pv)
        if ratio < 1:
            return Counterexample(tuple(u), tuple(v), ratio, m, k0, witness)
        if m >= m_cap:
            raise PreconditionError(f"no violating length m <= {m_cap}")
        # step j -> j+1 with j - k0 odd uses the swapped increments
        odd = (m - k0) % 2 == 1
        nu, nv = u[-1] + (dv if odd else du), v[-1] + (du if odd else dv)
        if nu not in kernel or nv not in kernel or u[-1] not in kernel or v[-1] not in kernel:
            raise PreconditionError(f"extension leaves the window before m_cap at m={m}")
        u.append(nu)
        v.append(nv)
        m += 1
