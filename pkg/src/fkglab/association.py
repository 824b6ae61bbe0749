"""Association: exact decision on desk-scale atomic measures, Monte Carlo probes otherwise.

On a finite poset every bounded increasing function is a constant plus a
nonnegative combination of up-set indicators, and covariance is bilinear, so
a measure is associated iff Cov(1_U, 1_V) >= 0 for all up-sets U, V.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from .lattice import DEFAULT_UPSET_CAP, FinitePoset, Point, leq, upset_masks
from .markov import make_rng
from .measures import AtomicMeasure

STRUCTURAL_TAGS = (
    "coordinate",
    "max",
    "min",
    "terminal",
    "time_average",
    "nonneg_weighted_sum",
)
DEFAULT_LEVEL = 0.99


class MonotonicityError(ValueError):
    pass


@dataclass(frozen=True)
class AssociationVerdict:
    holds: bool
    witness: tuple[frozenset, frozenset, Fraction] | None = None
    upsets: int = 0

    def __bool__(self) -> bool:
        return self.holds

    def to_json(self) -> dict:
        w = None
        if self.witness is not None:
            U, V, c = self.witness
            w = {
                "U": [list(p) for p in sorted(U)],
                "V": [list(p) for p in sorted(V)],
                "cov": {"num": str(c.numerator), "den": str(c.denominator)},
            }
        return {"holds": self.holds, "witness": w, "upsets": self.upsets}


def _upset_matrix(m: AtomicMeasure, cap: int):
    poset = FinitePoset(m.atoms)
    masks = [mk for mk in upset_masks(poset, cap)]
    full = (1 << len(poset)) - 1
    masks = [mk for mk in masks if mk not in (0, full)]
    B = np.array([[mk >> i & 1 for i in range(len(poset))] for mk in masks], dtype=np.int64)
    return poset, masks, B.reshape(len(masks), len(poset))


def is_associated_bruteforce(m: AtomicMeasure, cap: int = DEFAULT_UPSET_CAP) -> AssociationVerdict:
    """Exact association check over all pairs of nontrivial up-sets of the support."""
    poset, masks, B = _upset_matrix(m, cap)
    K = len(masks)
    if K < 2:
        return AssociationVerdict(True, None, K + 2)
    weights = [m(p) for p in poset.elements]
    den = math.lcm(*(w.denominator for w in weights))
    ints = [w.numerator * (den // w.denominator) for w in weights]
    exact64 = den < (1 << 30)
    if exact64:
        w = np.array(ints, dtype=np.int64)
        wU = B @ w
        for s in range(0, K, 512):
            S = (B[s : s + 512] * w) @ B.T
            cov = den * S - np.outer(wU[s : s + 512], wU)
            bad = np.argwhere(cov < 0)
            if len(bad):
                i, j = bad[0]
                return _witness(poset, masks, s + i, j, Fraction(int(cov[i, j]), den * den), K)
        return AssociationVerdict(True, None, K + 2)
    # float screen, exact recheck of anything near or below zero
    pf = np.array([float(x) for x in weights])
    pU = B @ pf
    wU = [sum(ints[k] for k in range(len(ints)) if mk >> k & 1) for mk in masks]
    for s in range(0, K, 512):
        S = (B[s : s + 512] * pf) @ B.T
        cov = S - np.outer(pU[s : s + 512], pU)
        for i, j in np.argwhere(cov < 1e-9):
            a, b = masks[s + i], masks[j]
            both = a & b
            wUV = sum(ints[k] for k in range(len(ints)) if both >> k & 1)
            c = den * wUV - wU[s + i] * wU[j]
            if c < 0:
                return _witness(poset, masks, s + i, j, Fraction(c, den * den), K)
    return AssociationVerdict(True, None, K + 2)


def _witness(poset, masks, i, j, cov, K):
    els = poset.elements
    U = frozenset(els[k] for k in range(len(els)) if masks[i] >> k & 1)
    V = frozenset(els[k] for k in range(len(els)) if masks[j] >> k & 1)
    return AssociationVerdict(False, (U, V, cov), K + 2)


def covariance_exact(m: AtomicMeasure, f: Callable[[Point], Fraction], g: Callable[[Point], Fraction]) -> Fraction:
    Ef = sum((w * f(p) for p, w in m.atoms.items()), Fraction(0))
    Eg = sum((w * g(p) for p, w in m.atoms.items()), Fraction(0))
    Efg = sum((w * f(p) * g(p) for p, w in m.atoms.items()), Fraction(0))
    return Efg - Ef * Eg


@dataclass(frozen=True)
class IncreasingFunctional:
    """Path/vector functional with a monotonicity certificate.

    ``evaluator`` maps an array of samples (first axis = sample) to one value
    per sample. ``tag`` is a structural tag from ``STRUCTURAL_TAGS`` or
    ``"user-asserted"``.
    """

    name: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    tag: str = "user-asserted"
    params: Mapping = field(default_factory=dict)

    def __call__(self, samples: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(samples)), dtype=float)

    def spot_check(self, samples: np.ndarray, pairs: int = 200, seed=0) -> bool:
        """f(u) <= f(u v w) on random pairs of samples."""
        samples = np.asarray(samples)
        if len(samples) < 2:
            return True
        rng = make_rng(seed)
        i = rng.integers(0, len(samples), pairs)
        j = rng.integers(0, len(samples), pairs)
        u = samples[i]
        top = np.maximum(u, samples[j])
        return bool(np.all(self(u) <= self(top) + 1e-12 * (1 + np.abs(self(top)))))

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.params.get("kind", self.tag), **{
            k: v for k, v in self.params.items() if k != "kind"}}


def _component(x: np.ndarray, component: int | None) -> np.ndarray:
    if x.ndim == 3:
        return x[:, :, component or 0]
    return x


def coordinate(index: int, component: int | None = None) -> IncreasingFunctional:
    """X_index (1-based time index)."""
    return IncreasingFunctional(
        f"X[{index}]" if component is None else f"X[{index}][{component}]",
        lambda x: _component(x, component)[:, index - 1],
        "coordinate",
        {"kind": "coordinate", "index": index, **({} if component is None else {"component": component})},
    )


def midpoint() -> IncreasingFunctional:
    return IncreasingFunctional(
        "midpoint", lambda x: x[:, (x.shape[1] + 1) // 2 - 1], "coordinate", {"kind": "midpoint"}
    )


def _per_component(kind: str, tag: str, ev, component: int | None) -> IncreasingFunctional:
    return IncreasingFunctional(
        kind if component is None else f"{kind}[{component}]",
        lambda x: ev(_component(x, component)),
        tag,
        {"kind": kind, **({} if component is None else {"component": component})},
    )


def running_max(component: int | None = None) -> IncreasingFunctional:
    return _per_component("running_max", "max", lambda x: x.max(axis=1), component)


def running_min(component: int | None = None) -> IncreasingFunctional:
    return _per_component("running_min", "min", lambda x: x.min(axis=1), component)


def terminal(component: int | None = None) -> IncreasingFunctional:
    return _per_component("terminal", "terminal", lambda x: x[:, -1], component)


def time_average(component: int | None = None) -> IncreasingFunctional:
    return _per_component("time_average", "time_average", lambda x: x.mean(axis=1), component)


def terminal_quarter_average() -> IncreasingFunctional:
    def ev(x):
        n = x.shape[1]
        return x[:, n - max(1, n // 4) :].mean(axis=1)

    return IncreasingFunctional("terminal_quarter_average", ev, "time_average", {"kind": "terminal_quarter_average"})


def weighted_sum(weights: Sequence[float]) -> IncreasingFunctional:
    w = np.asarray(weights, dtype=float)
    if (w < 0).any():
        raise MonotonicityError("nonneg_weighted_sum needs nonnegative weights")
    return IncreasingFunctional(
        "weighted_sum", lambda x: x.reshape(len(x), -1) @ w, "nonneg_weighted_sum",
        {"kind": "weighted_sum", "weights": w.tolist()},
    )


def standard_family(n: int) -> list[IncreasingFunctional]:
    """Midpoint, running max/min, time average, terminal-quarter average, X at n/4."""
    return [
        midpoint(),
        running_max(),
        running_min(),
        time_average(),
        terminal_quarter_average(),
        coordinate(max(1, n // 4)),
    ]


def functional_from_config(doc: Mapping) -> IncreasingFunctional:
    kind = doc["kind"]
    comp = doc.get("component")
    if kind == "coordinate":
        return coordinate(int(doc["index"]), comp)
    if kind == "midpoint":
        return midpoint()
    if kind == "running_max":
        return running_max(comp)
    if kind == "running_min":
        return running_min(comp)
    if kind == "terminal":
        return terminal(comp)
    if kind == "time_average":
        return time_average(comp)
    if kind == "terminal_quarter_average":
        return terminal_quarter_average()
    if kind == "weighted_sum":
        return weighted_sum(doc["weights"])
    raise ValueError(f"unknown functional kind {kind!r}")


@dataclass(frozen=True)
class CovarianceReport:
    estimate: float
    stderr: float
    ci_lower: float
    ci_upper: float
    samples: int
    seed: object
    level: float
    functionals: tuple[str, str]

    def to_json(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ci_lower": self.ci_lower,
            "ci_upper": self.ci_upper,
            "samples": self.samples,
            "seed": self.seed,
            "level": self.level,
            "functionals": list(self.functionals),
        }


def _covariance(fv: np.ndarray, gv: np.ndarray, level: float, seed, names) -> CovarianceReport:
    N = len(fv)
    # shift by the first sample so a constant functional centers to exact zeros
    a = fv - fv[0]
    b = gv - gv[0]
    a = a - a.mean()
    b = b - b.mean()
    prod = a * b
    est = float(prod.sum() / (N - 1))
    se = float(prod.std(ddof=1) / math.sqrt(N))
    z = float(stats.norm.ppf(0.5 + level / 2))
    lo, hi = est - z * se, est + z * se
    return CovarianceReport(est, se, min(lo, est), max(hi, est), N, seed, level, names)


def mc_covariance(
    sampler: Callable[[int, np.random.Generator], np.ndarray],
    f: IncreasingFunctional,
    g: IncreasingFunctional,
    N: int,
    seed,
    level: float = DEFAULT_LEVEL,
) -> CovarianceReport:
    """Sample covariance of f(X), g(X) with a plug-in standard error and a
    two-sided normal CI at ``level``. ``sampler(N, rng)`` returns N samples."""
    if N < 100:
        raise ValueError("mc_covariance needs N >= 100")
    X = np.asarray(sampler(N, make_rng(seed)))
    return _covariance(f(X), g(X), level, seed, (f.name, g.name))


@dataclass(frozen=True)
class ProbeResult:
    verdict: str
    reports: list
    level: float
    corrected_level: float

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "level": self.level,
            "corrected_level": self.corrected_level,
            "reports": [r.to_json() for r in self.reports],
        }


def association_probe(
    sampler: Callable[[int, np.random.Generator], np.ndarray],
    family: Sequence[IncreasingFunctional],
    N: int,
    seed,
    level: float = DEFAULT_LEVEL,
    spot_check: bool = True,
) -> ProbeResult:
    """Covariance of every unordered pair of the family, from one sample of size N.

    Bonferroni: each pair is tested at 1 - (1 - level)/pairs. The verdict is
    "violation-witnessed" iff some upper confidence bound is below zero, and
    "consistent" otherwise; association itself is never claimed.
    """
    if N < 100:
        raise ValueError("association_probe needs N >= 100")
    fam = list(family)
    pairs = [(i, j) for i in range(len(fam)) for j in range(i + 1, len(fam))]
    X = np.asarray(sampler(N, make_rng(seed)))
    if spot_check:
        for f in fam:
            if f.tag == "user-asserted" and not f.spot_check(X):
                raise MonotonicityError(f"functional {f.name!r} failed the monotonicity spot check")
    values = [f(X) for f in fam]
    corrected = 1 - (1 - level) / max(1, len(pairs))
    reports = [
        _covariance(values[i], values[j], corrected, seed, (fam[i].name, fam[j].name)) for i, j in pairs
    ]
    verdict = "violation-witnessed" if any(r.ci_upper < 0 for r in reports) else "consistent"
    return ProbeResult(verdict, reports, level, corrected)


MONOTONE_MAPS = ("identity", "partial_sums", "projection", "user-asserted")


@dataclass(frozen=True)
class PushforwardResult:
    source_associated: bool
    image_associated: bool

    @property
    def consistent(self) -> bool:
        return self.image_associated or not self.source_associated


def monotone_map(kind: str, indices: Sequence[int] | None = None) -> Callable[[Point], Point]:
    if kind == "identity":
        return lambda p: tuple(p)
    if kind == "partial_sums":
        return lambda p: tuple(int(x) for x in np.cumsum(p))
    if kind == "projection":
        idx = list(indices or [])
        return lambda p: tuple(p[i] for i in idx)
    raise MonotonicityError(f"no structural certificate for map {kind!r}")


def pushforward_check(
    m: AtomicMeasure, fn: Callable[[Point], Point], certificate: str, cap: int = DEFAULT_UPSET_CAP
) -> PushforwardResult:
    """Push ``m`` through a monotone map and decide association on both sides."""
    if certificate not in MONOTONE_MAPS:
        raise MonotonicityError(f"unknown monotonicity certificate {certificate!r}")
    if certificate == "user-asserted":
        pts = list(m.atoms)
        for u in pts:
            for v in pts:
                if leq(u, v) and not leq(fn(u), fn(v)):
                    raise MonotonicityError(f"map not monotone on {u} <= {v}")
    img = m.pushforward(fn)
    return PushforwardResult(
        is_associated_bruteforce(m, cap).holds, is_associated_bruteforce(img, cap).holds
    )
