"""Named acceptance suites, shared by the CLI (`fkglab suite NAME`) and the tests."""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats

from . import association as assoc
from .lattice import comparable
from .fkg import (
    check_H1,
    construct_counterexample_paths,
    fkg_lattice_condition,
    has_unfavorable_crossings,
    is_log_concave,
    residue_class,
)
from .markov import (
    ChainSpec,
    PathEvent,
    ZeroProbabilityEvent,
    condition_by_enumeration,
    condition_on_event,
    event_maxmin_stable,
    exact_path_law,
    sample_conditioned,
)
from .measures import (
    AtomicMeasure,
    IncrementLaw,
    TransitionKernel,
    discrete_laplace,
    kernel_from_increments,
    lazy_srw,
    power_law,
)
from .processes import LevyTriplet, bessel_kernel, levy_check_association, sample_levy_path

DEFAULT_SEED = 20240611

# Associated (up-set oracle) but fails the lattice condition at (0,1), (1,0):
# P(1,1) P(0,0) = 4/225 < 12/225 = P(0,1) P(1,0).
ASSOCIATED_NOT_LATTICE = AtomicMeasure(
    {
        (0, 0): Fraction(2, 15),
        (0, 1): Fraction(4, 15),
        (1, 0): Fraction(3, 15),
        (1, 1): Fraction(2, 15),
        (2, 1): Fraction(4, 15),
    }
)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    elapsed: float
    budget: float
    details: dict = field(default_factory=dict)

    @property
    def within_budget(self) -> bool:
        return self.elapsed < self.budget

    def line(self) -> str:
        status = "PASS" if self.passed and self.within_budget else "FAIL"
        return f"[{status}] {self.name}: {self.elapsed:.2f}s (budget {self.budget:.0f}s) {self.details.get('summary', '')}"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "elapsed": self.elapsed,
            "budget": self.budget,
            "within_budget": self.within_budget,
            "details": self.details,
        }


def _pmap(fn, items, threads: int = 1):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- generators

_RATIOS = [Fraction(3), Fraction(2), Fraction(3, 2), Fraction(1), Fraction(2, 3), Fraction(1, 2), Fraction(1, 3)]


def random_log_concave_law(rng: random.Random, span: int = 3) -> IncrementLaw:
    """Contiguous weights on aZ+b inside {-span..span} with nonincreasing ratios."""
    a = rng.choice([1, 1, 1, 2, 3])
    L = rng.randint(1, 2 * span // a + 1)
    first = rng.randint(-span, span - a * (L - 1))
    ratios = sorted((rng.choice(_RATIOS) for _ in range(L - 1)), reverse=True)
    w = [Fraction(1)]
    for r in ratios:
        w.append(w[-1] * r)
    return IncrementLaw.from_weights({first + a * i: x for i, x in enumerate(w)})


def random_increment_law(rng: random.Random, span: int = 3) -> IncrementLaw:
    mode = rng.randrange(3)
    if mode == 0:
        pts = rng.sample(range(-span, span + 1), rng.randint(1, 2 * span + 1))
        return IncrementLaw.from_weights({z: rng.randint(1, 9) for z in pts})
    law = random_log_concave_law(rng, span)
    if mode == 1 or len(law.pmf) < 3:
        return law
    w = dict(law.pmf)
    k = rng.choice(list(w)[1:-1])
    w[k] *= rng.choice([Fraction(1, 2), Fraction(2, 3), Fraction(3, 2), Fraction(3, 1)])
    return IncrementLaw.from_weights(w)


def random_birth_death(rng: random.Random, size: int) -> TransitionKernel:
    rows = {0: {1: 1}, size - 1: {size - 2: 1}}
    for i in range(1, size - 1):
        up = Fraction(rng.randint(1, 5), 6)
        rows[i] = {i + 1: up, i - 1: 1 - up}
    return TransitionKernel((0, size - 1), rows)


def random_kernel(rng: random.Random, size: int) -> TransitionKernel:
    rows = {}
    for x in range(size):
        targets = rng.sample(range(size), rng.randint(1, min(3, size)))
        rows[x] = {y: rng.randint(1, 5) for y in targets}
        tot = sum(rows[x].values())
        rows[x] = {y: Fraction(v, tot) for y, v in rows[x].items()}
    return TransitionKernel((0, size - 1), rows)


def random_interval_event(rng: random.Random, lo: int, hi: int, n: int) -> PathEvent:
    lower, upper = [], []
    for k in range(1, n + 1):
        a = rng.randint(lo, hi) if rng.random() < 0.4 else None
        b = rng.randint(a if a is not None else lo, hi) if rng.random() < 0.4 else None
        lower.append(a)
        upper.append(b)
    if rng.random() < 0.25:
        c = rng.randint(lo, hi)
        lower[-1] = upper[-1] = c
    return PathEvent.interval(lower, upper)


def random_h1_instance(rng: random.Random, max_support: int = assoc.DEFAULT_UPSET_CAP):
    """(chain, event, conditional measure) with check_H1 passing and P(A) > 0.

    The conditional support must fit the up-set oracle and must not be totally
    ordered (a chain support is associated for free).
    """
    while True:
        n = rng.randint(2, 4)
        kind = rng.randrange(3)
        if kind == 0:
            kernel = random_birth_death(rng, rng.randint(3, 9))
        elif kind == 1:
            law = random_log_concave_law(rng, span=1)
            kernel = kernel_from_increments(law, (0, 8))
        else:
            kernel = random_kernel(rng, rng.randint(2, 6))
        start = rng.randint(kernel.lo, kernel.hi) if kind != 1 else 4
        try:
            if not check_H1(kernel, start, n).holds:
                continue
            chain = ChainSpec(kernel, start, n)
            event = random_interval_event(rng, kernel.lo, kernel.hi, n)
            law = condition_on_event(chain, event)
            m = law.to_measure()
        except (ZeroProbabilityEvent, ValueError):
            continue
        if len(m) > max_support or _totally_ordered(m):
            continue
        return chain, event, m


def _totally_ordered(m: AtomicMeasure) -> bool:
    pts = list(m.atoms)
    return all(comparable(u, v) for i, u in enumerate(pts) for v in pts[i + 1 :])


# ---------------------------------------------------------------- criteria


def equivalence(count: int = 500, seed: int = DEFAULT_SEED, threads: int = 1) -> SuiteResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    laws = [random_increment_law(rng) for _ in range(count)]
    window = (-12, 12)

    def verdicts(law: IncrementLaw):
        lc = is_log_concave(law).holds
        kernel = kernel_from_increments(law, window)
        uc = all(
            has_unfavorable_crossings(kernel, residue_class(law.a, b, -8, 8)).holds for b in range(law.a)
        )
        lat = [fkg_lattice_condition(exact_path_law(ChainSpec(kernel, 0, n))).holds for n in (2, 3)]
        return lc, uc, lat[0], lat[1]

    res = _pmap(verdicts, laws, threads)
    bad = [(law.to_json(), r) for law, r in zip(laws, res) if len(set(r)) != 1]
    n_lc = sum(r[0] for r in res)
    return SuiteResult(
        "prop111",
        not bad,
        time.perf_counter() - t0,
        60,
        {
            "summary": f"{count} laws, {n_lc} log-concave, {len(bad)} disagreements",
            "laws": count,
            "log_concave": n_lc,
            "disagreements": bad[:5],
        },
    )


def gamma_threshold(seed: int = DEFAULT_SEED) -> SuiteResult:
    t0 = time.perf_counter()
    wrong = []
    for k in range(101):
        g = Fraction(k, 100)
        kernel = kernel_from_increments(lazy_srw(g), (-4, 4))
        holds = has_unfavorable_crossings(kernel, kernel.window).holds
        if holds != (g >= Fraction(1, 3)):
            wrong.append(str(g))
    return SuiteResult(
        "gamma", not wrong, time.perf_counter() - t0, 5,
        {"summary": f"101 gammas, {len(wrong)} mismatches", "mismatches": wrong},
    )


def _witness_strict(kernel: TransitionKernel, w: dict) -> bool:
    u1, u2, v1, v2 = w["u1"], w["u2"], w["v1"], w["v2"]
    lhs = kernel.p(u1, u2) * kernel.p(v1, v2)
    rhs = kernel.p(max(u1, v1), max(u2, v2)) * kernel.p(min(u1, v1), min(u2, v2))
    return lhs > rhs


def named_families(seed: int = DEFAULT_SEED) -> SuiteResult:
    t0 = time.perf_counter()
    checks = {}
    for beta in ("log(2)", "1/2", "1.3", "3"):
        for K in (1, 2, 3, 4):
            kernel = kernel_from_increments(discrete_laplace(beta, K), (-6, 6))
            checks[f"laplace beta={beta} K={K} Z-u.c."] = has_unfavorable_crossings(kernel, kernel.window).holds
    for alpha in ("1.5", "2", "3"):
        for K in (2, 3, 4):
            kernel = kernel_from_increments(power_law(alpha, K), (-6, 6))
            v = has_unfavorable_crossings(kernel, kernel.window)
            checks[f"power alpha={alpha} K={K} fails Z-u.c. with witness"] = (
                not v.holds and v.witness is not None and _witness_strict(kernel, v.witness)
            )
    kernel = kernel_from_increments(lazy_srw(0), (-6, 6))
    checks["srw 2Z-u.c."] = has_unfavorable_crossings(kernel, residue_class(2, 0, -6, 6)).holds
    checks["srw (2Z+1)-u.c."] = has_unfavorable_crossings(kernel, residue_class(2, 1, -6, 6)).holds
    failed = [k for k, v in checks.items() if not v]
    return SuiteResult(
        "families", not failed, time.perf_counter() - t0, 5,
        {"summary": f"{len(checks)} checks, {len(failed)} failed", "failed": failed},
    )


def h1_conditioning(count: int = 200, seed: int = DEFAULT_SEED, threads: int = 1) -> SuiteResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    instances = [random_h1_instance(rng) for _ in range(count)]

    def run(inst):
        chain, event, m = inst
        stable = event_maxmin_stable(event, chain, enumerate_paths=True)
        return stable and fkg_lattice_condition(m).holds and assoc.is_associated_bruteforce(m).holds

    res = _pmap(run, instances, threads)
    failures = [
        {"start": c.start, "n": c.n, "kernel": c.kernel.to_json(), "event": e.to_json()}
        for (c, e, _), ok in zip(instances, res)
        if not ok
    ]
    sizes = [len(m) for _, _, m in instances]
    return SuiteResult(
        "h1-conditioning", not failures, time.perf_counter() - t0, 120,
        {
            "summary": f"{count} chains passing H1, {len(failures)} failures, max support {max(sizes)}",
            "failures": failures[:3],
            "nontrivial": sum(s > 1 for s in sizes),
        },
    )


def counterexample_suite(seed: int = DEFAULT_SEED) -> SuiteResult:
    t0 = time.perf_counter()
    out = {}
    ok = True
    for label, law in (("power_law(2,2)", power_law(2, 2)), ("lazy_srw(1/5)", lazy_srw(Fraction(1, 5)))):
        kernel = kernel_from_increments(law, (-40, 40))
        ce = construct_counterexample_paths(kernel, 0)
        pl = exact_path_law(ChainSpec(kernel, 0, ce.m))
        j = tuple(map(max, ce.u, ce.v))
        mt = tuple(map(min, ce.u, ce.v))
        direct = pl(j) * pl(mt) < pl(ce.u) * pl(ce.v)
        scan = fkg_lattice_condition(pl)
        this = ce.ratio < 1 and direct and not scan.holds
        ok = ok and this
        out[label] = {"m": ce.m, "ratio": str(ce.ratio), "u": ce.u, "v": ce.v, "scan_fails": not scan.holds}
    return SuiteResult(
        "counterexample", ok, time.perf_counter() - t0, 5,
        {"summary": "; ".join(f"{k}: m={v['m']} ratio={v['ratio']}" for k, v in out.items()), **out},
    )


def _oracle_fixtures():
    srw = kernel_from_increments(lazy_srw(0), (-8, 8))
    for n in range(1, 7):
        for ev in (PathEvent.bridge(0), PathEvent.meander(), PathEvent.excursion(0), PathEvent.bridge(2)):
            yield f"srw {ev.kind}({ev.endpoint}) n={n}", ChainSpec(srw, 0, n), ev
    lap = kernel_from_increments(discrete_laplace("log(2)", 2), (-10, 10))
    for n in range(1, 5):
        yield f"laplace interval n={n}", ChainSpec(lap, 0, n), PathEvent.interval([-1] * n, [2] * n)
        yield (
            f"laplace sloped interval n={n}",
            ChainSpec(lap, 0, n),
            PathEvent.interval([k - 2 for k in range(n)], [k + 1 for k in range(n)]),
        )


def oracle_conditioning(seed: int = DEFAULT_SEED) -> SuiteResult:
    t0 = time.perf_counter()
    checked, skipped, bad = 0, 0, []
    for label, chain, ev in _oracle_fixtures():
        try:
            dp = condition_on_event(chain, ev).to_measure()
        except ZeroProbabilityEvent:
            try:
                condition_by_enumeration(chain, ev)
                bad.append(label + " (DP says P(A)=0, enumeration disagrees)")
            except ZeroProbabilityEvent:
                skipped += 1
            continue
        checked += 1
        if dp.atoms != condition_by_enumeration(chain, ev).atoms:
            bad.append(label)
    return SuiteResult(
        "oracle-cond", not bad and checked > 0, time.perf_counter() - t0, 10,
        {"summary": f"{checked} fixtures equal atom-by-atom, {skipped} zero-probability, {len(bad)} mismatches",
         "mismatches": bad},
    )


def conditioned_sampler(law) -> Callable:
    return lambda N, rng: sample_conditioned(law, rng, N)


def probes(seed: int = DEFAULT_SEED, N: int = 100_000, n: int = 64, level: float = 0.99) -> SuiteResult:
    t0 = time.perf_counter()
    fam = assoc.standard_family(n)
    runs = {}
    srw = kernel_from_increments(lazy_srw(0), (-n - 1, n + 1))
    law = condition_on_event(ChainSpec(srw, 0, n), PathEvent.bridge(0))
    runs["srw bridge"] = assoc.association_probe(conditioned_sampler(law), fam, N, seed, level)
    for nu in ("-1/2", "0", "1"):
        law = condition_on_event(ChainSpec(bessel_kernel(nu, n + 2), 0, n), PathEvent.full())
        runs[f"bessel nu={nu}"] = assoc.association_probe(conditioned_sampler(law), fam, N, seed, level)
    ok = all(r.consistent for r in runs.values())
    return SuiteResult(
        "probes", ok, time.perf_counter() - t0, 120,
        {
            "summary": ", ".join(f"{k}: {r.verdict}" for k, r in runs.items()),
            "min_upper": {k: min(x.ci_upper for x in r.reports) for k, r in runs.items()},
        },
    )


def levy_suite(seed: int = DEFAULT_SEED, N: int = 100_000) -> SuiteResult:
    t0 = time.perf_counter()
    checks = {}
    d1 = [
        LevyTriplet([0.0], [[1.0]]),
        LevyTriplet([0.3], [[2.0]], [([1.5], 1.0), ([-0.7], 2.0)]),
        LevyTriplet([-1.0], [[0.0]], [([-3.0], 0.5)]),
    ]
    checks["d=1 associated"] = all(levy_check_association(t).associated for t in d1)
    neg = levy_check_association(LevyTriplet([0, 0], [[1, -0.5], [-0.5, 1]]))
    checks["negative sigma"] = not neg.associated and neg.failed_condition == "gaussian_sign"
    mixed = levy_check_association(LevyTriplet([0, 0], [[1, 0], [0, 1]], [([1, -1], 1.0)]))
    checks["mixed-quadrant jump"] = not mixed.associated and mixed.failed_condition == "jump_quadrant"
    jump = LevyTriplet([0, 0], [[0, 0], [0, 0]], [([1, -1], 1.0)])
    rep = assoc.mc_covariance(
        lambda m, rng: sample_levy_path(jump, 1.0, 16, rng, m),
        assoc.terminal(0), assoc.terminal(1), N, seed, 0.99,
    )
    checks["jump witness upper CI < 0"] = rep.ci_upper < 0
    failed = [k for k, v in checks.items() if not v]
    return SuiteResult(
        "levy", not failed, time.perf_counter() - t0, 60,
        {"summary": f"cov estimate {rep.estimate:.4f} CI [{rep.ci_lower:.4f}, {rep.ci_upper:.4f}]; failed: {failed}",
         "covariance": rep.to_json(), "failed": failed},
    )


def _sampler_fixtures():
    srw = kernel_from_increments(lazy_srw(0), (-8, 8))
    yield "srw bridge n=6", ChainSpec(srw, 0, 6), PathEvent.bridge(0)
    yield "srw meander n=5", ChainSpec(srw, 0, 5), PathEvent.meander()
    yield "srw excursion n=8", ChainSpec(srw, 0, 8), PathEvent.excursion(0)
    lazy = kernel_from_increments(lazy_srw(Fraction(1, 2)), (-8, 8))
    yield "lazy srw interval n=3", ChainSpec(lazy, 0, 3), PathEvent.interval([-1, -1, 0], [1, 2, 1])
    lap = kernel_from_increments(discrete_laplace("log(2)", 1), (-8, 8))
    yield "laplace bridge n=3", ChainSpec(lap, 0, 3), PathEvent.bridge(1)
    yield "bessel nu=0 n=6", ChainSpec(bessel_kernel(0, 8), 0, 6), PathEvent.full()


def sampler_gof(seed: int = DEFAULT_SEED, N: int = 100_000, alpha: float = 0.001) -> SuiteResult:
    t0 = time.perf_counter()
    pvals = {}
    ok = True
    for i, (label, chain, ev) in enumerate(_sampler_fixtures()):
        law = condition_on_event(chain, ev)
        m = law.to_measure()
        if len(m) > 32:
            raise AssertionError(f"fixture {label} has {len(m)} > 32 paths")
        paths = list(m.atoms)
        index = {p: k for k, p in enumerate(paths)}
        samples = sample_conditioned(law, seed + i, N)
        counts = np.zeros(len(paths))
        for row in map(tuple, samples.tolist()):
            counts[index[row]] += 1  # KeyError here = sample outside the support
        expected = np.array([float(w) for w in m.atoms.values()]) * N
        p = stats.chisquare(counts, expected).pvalue if len(paths) > 1 else 1.0
        pvals[label] = float(p)
        ok = ok and p >= alpha
    return SuiteResult(
        "sampler", ok, time.perf_counter() - t0, 30,
        {"summary": "min p-value %.4f over %d fixtures" % (min(pvals.values()), len(pvals)), "p_values": pvals},
    )


def fixture_suite(seed: int = DEFAULT_SEED) -> SuiteResult:
    t0 = time.perf_counter()
    m = ASSOCIATED_NOT_LATTICE
    a = assoc.is_associated_bruteforce(m)
    lat = fkg_lattice_condition(m)
    return SuiteResult(
        "fixture", a.holds and not lat.holds, time.perf_counter() - t0, 5,
        {"summary": f"associated={a.holds}, lattice={lat.holds}", "measure": m.to_json()},
    )


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "prop111": equivalence,
    "gamma": gamma_threshold,
    "families": named_families,
    "h1-conditioning": h1_conditioning,
    "counterexample": counterexample_suite,
    "oracle-cond": oracle_conditioning,
    "probes": probes,
    "levy": levy_suite,
    "sampler": sampler_gof,
    "fixture": fixture_suite,
}


def run_suite(name: str, seed: int = DEFAULT_SEED, threads: int = 1) -> list[SuiteResult]:
    names = list(SUITES) if name == "all" else [name]
    out = []
    for nm in names:
        fn = SUITES[nm]
        kw = {"seed": seed}
        if nm in ("prop111", "h1-conditioning"):
            kw["threads"] = threads
        out.append(fn(**kw))
    return out
