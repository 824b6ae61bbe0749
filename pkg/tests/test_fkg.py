import itertools
from fractions import Fraction as F

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import increment_weights, small_measures
from fkglab.fkg import (
    PreconditionError,
    check_H1,
    construct_counterexample_paths,
    fkg_lattice_condition,
    has_unfavorable_crossings,
    is_log_concave,
    residue_class,
    support_gcd,
)
from fkglab.lattice import join, meet
from fkglab.markov import ChainSpec, PathEvent, condition_on_event, event_maxmin_stable, exact_path_law
from fkglab.measures import (
    AtomicMeasure,
    IncrementLaw,
    TransitionKernel,
    WindowExit,
    product_measure,
    discrete_laplace,
    kernel_from_increments,
    lazy_srw,
    power_law,
)

W = (-12, 12)


def walk_law(law, n, window=W):
    return exact_path_law(ChainSpec(kernel_from_increments(law, window), 0, n))


def checked(v, m):
    """The verdict, after confirming any witness is a genuine violation of m."""
    if not v.holds:
        w = v.witness
        assert m(join(w["u"], w["v"])) * m(meet(w["u"], w["v"])) < m(w["u"]) * m(w["v"])
    return v.holds


def naive_lattice(m):
    pts = list(m.atoms)
    return all(m(join(u, v)) * m(meet(u, v)) >= m(u) * m(v) for u in pts for v in pts)


def naive_crossings(kernel, X1):
    states = range(kernel.lo - 4, kernel.hi + 5)

    def p(x, y):
        return kernel.rows[x].get(y, F(0))

    for u1, v1 in itertools.product(X1, repeat=2):
        for u2, v2 in itertools.product(states, repeat=2):
            lhs = p(u1, u2) * p(v1, v2)
            rhs = p(max(u1, v1), max(u2, v2)) * p(min(u1, v1), min(u2, v2))
            if lhs > rhs:
                return False
    return True


def naive_log_concave(pmf):
    """Log-concavity on the full integer grid after dividing out the support lattice."""
    sup = sorted(pmf)
    if len(sup) < 2:
        return True
    a = 0
    for w in sup:
        a = __import__("math").gcd(a, w - sup[0])
    q = [pmf.get(sup[0] + a * i, F(0)) for i in range((sup[-1] - sup[0]) // a + 1)]
    if any(x == 0 for x in q):
        return False
    return all(q[i] ** 2 >= q[i - 1] * q[i + 1] for i in range(1, len(q) - 1))


# lattice condition


def test_one_dimensional_holds():
    m = AtomicMeasure.from_weights({(0,): 1, (3,): 5, (7,): 2})
    assert fkg_lattice_condition(m).holds


def test_power_law_path_law_fails():
    m = walk_law(power_law(2, 2), 2)
    v = fkg_lattice_condition(m)
    assert not v.holds and not naive_lattice(m)
    w = v.witness
    assert w["P(join)"] * w["P(meet)"] < w["P(u)"] * w["P(v)"]
    assert w["P(join)"] == m(join(w["u"], w["v"]))


def test_lazy_half_path_law_holds():
    m = walk_law(lazy_srw(F(1, 2)), 2)
    assert fkg_lattice_condition(m).holds and naive_lattice(m)


@given(small_measures(dim=2, max_atoms=8, lo=0, hi=3))
def test_lattice_matches_naive(w):
    m = AtomicMeasure(w)
    assert checked(fkg_lattice_condition(m), m) == naive_lattice(m)


@given(small_measures(dim=3, max_atoms=8, lo=0, hi=1))
def test_lattice_matches_naive_3d(w):
    m = AtomicMeasure(w)
    assert checked(fkg_lattice_condition(m), m) == naive_lattice(m)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(-1, 1), st.integers(0, 3)), min_size=2, max_size=16, unique=True),
       st.data())
def test_lattice_matches_naive_rectangular(pts, data):
    ws = data.draw(st.lists(st.integers(1, 6), min_size=len(pts), max_size=len(pts)))
    m = AtomicMeasure.from_weights(dict(zip(pts, ws)))
    assert checked(fkg_lattice_condition(m), m) == naive_lattice(m)


@given(st.lists(st.dictionaries(st.integers(-3, 3), st.integers(1, 5), min_size=1), min_size=2, max_size=3))
def test_product_measures_hold(factors):
    # equality case of the lattice condition, on grids with unequal spans
    m = product_measure(*(AtomicMeasure.from_weights({(k,): v for k, v in f.items()}) for f in factors))
    assert fkg_lattice_condition(m).holds


def test_conditioned_laplace_walk_holds():
    chain = ChainSpec(kernel_from_increments(discrete_laplace("log(2)", 2), (-6, 6)), 0, 3)
    m = condition_on_event(chain, PathEvent.interval([-1, -2, -2], [1, 2, 2])).to_measure()
    assert naive_lattice(m) and fkg_lattice_condition(m).holds


def test_lattice_huge_denominators():
    # weights whose integer scaling overflows int64
    big = 2**70 + 1
    m = AtomicMeasure.from_weights({(0, 0): big, (0, 1): 1, (1, 0): 1, (1, 1): big - 5})
    assert checked(fkg_lattice_condition(m), m) == naive_lattice(m)
    m2 = AtomicMeasure.from_weights({(0, 0): 1, (0, 1): big, (1, 0): big, (1, 1): 1})
    assert not fkg_lattice_condition(m2).holds


# crossings


def test_srw_even_class():
    k = kernel_from_increments(lazy_srw(0), W)
    assert has_unfavorable_crossings(k, residue_class(2, 0, *W)).holds
    assert has_unfavorable_crossings(k, residue_class(2, 1, *W)).holds


def test_lazy_quarter_fails():
    k = kernel_from_increments(lazy_srw(F(1, 4)), W)
    v = has_unfavorable_crossings(k, k.window)
    assert not v.holds
    w = v.witness
    assert w["u1"] < w["v1"] and w["u2"] > w["v2"]
    assert w["lhs"] > w["rhs"]
    assert w["lhs"] == k.p(w["u1"], w["u2"]) * k.p(w["v1"], w["v2"])


def test_laplace_holds():
    k = kernel_from_increments(discrete_laplace("log(2)", 2), W)
    assert has_unfavorable_crossings(k, k.window).holds


def test_crossings_outside_window():
    k = kernel_from_increments(lazy_srw(0), (0, 3))
    with pytest.raises(WindowExit):
        has_unfavorable_crossings(k, [5])


@given(increment_weights(), st.integers(1, 3), st.integers(0, 2))
def test_crossings_match_naive(weights, a, b):
    k = kernel_from_increments(IncrementLaw.from_weights(weights), (-4, 4))
    X1 = residue_class(a, b % a, -4, 4)
    assert has_unfavorable_crossings(k, X1).holds == naive_crossings(k, X1)


@given(st.integers(0, 100))
def test_gamma_threshold(k):
    g = F(k, 100)
    kern = kernel_from_increments(lazy_srw(g), (-6, 6))
    assert has_unfavorable_crossings(kern, kern.window).holds == (g >= F(1, 3))


# log-concavity and support arithmetic


def test_logconcave_examples():
    assert is_log_concave(discrete_laplace("log(2)", 2)).holds
    v = is_log_concave(lazy_srw(F(1, 5)))
    assert not v.holds and v.witness == (-1, 0, 1)
    assert is_log_concave(IncrementLaw({3: 1})).holds


def test_interior_gap():
    v = is_log_concave(IncrementLaw.from_weights({0: 1, 1: 1, 3: 1}))
    assert not v.holds and v.witness == (1, 2, 3)


@pytest.mark.parametrize(
    "law,ab",
    [(lazy_srw(0), (2, 1)), (lazy_srw(F(1, 2)), (1, 0)), (IncrementLaw.from_weights({0: 1, 6: 1, 9: 1}), (3, 0))],
)
def test_support_gcd(law, ab):
    assert tuple(support_gcd(law)[:2]) == ab


def test_support_gcd_point_mass():
    s = support_gcd(IncrementLaw({4: 1}))
    assert (s.a, s.b, s.degenerate) == (1, 4, True)


@given(increment_weights())
def test_logconcave_matches_naive(weights):
    law = IncrementLaw.from_weights(weights)
    assert is_log_concave(law).holds == naive_log_concave(law.pmf)


@given(increment_weights())
def test_three_way_equivalence(weights):
    law = IncrementLaw.from_weights(weights)
    kern = kernel_from_increments(law, (-10, 10))
    lc = is_log_concave(law).holds
    uc = all(has_unfavorable_crossings(kern, residue_class(law.a, b, -6, 6)).holds for b in range(law.a))
    lat2 = fkg_lattice_condition(walk_law(law, 2, (-10, 10))).holds
    assert lc == uc == lat2


# (H1)


def test_h1_srw():
    rep = check_H1(kernel_from_increments(lazy_srw(0), W), 0, 4)
    assert rep.holds
    assert [sorted(s) for _, s, _ in rep.steps][:3] == [[0], [-1, 1], [-2, 0, 2]]


def test_h1_lazy_quarter():
    rep = check_H1(kernel_from_increments(lazy_srw(F(1, 4)), W), 0, 2)
    assert not rep.holds
    assert rep.steps[0][2].holds and not rep.steps[1][2].holds


def test_h1_laplace():
    assert check_H1(kernel_from_increments(discrete_laplace("log(2)", 2), W), 0, 3).holds


@st.composite
def small_kernels(draw, size=5):
    rows = {}
    for x in range(size):
        targets = draw(st.lists(st.integers(max(0, x - 1), min(size - 1, x + 1)), min_size=1, max_size=3, unique=True))
        ws = draw(st.lists(st.integers(1, 5), min_size=len(targets), max_size=len(targets)))
        rows[x] = {y: F(w, sum(ws)) for y, w in zip(targets, ws)}
    return TransitionKernel((0, size - 1), rows)


@given(small_kernels(), st.integers(0, 4), st.integers(1, 4))
def test_h1_implies_lattice(kernel, start, n):
    if check_H1(kernel, start, n).holds:
        assert fkg_lattice_condition(exact_path_law(ChainSpec(kernel, start, n))).holds


@given(small_kernels(), st.integers(0, 4), st.integers(2, 3), st.data())
def test_lattice_preserved_by_stable_conditioning(kernel, start, n, data):
    chain = ChainSpec(kernel, start, n)
    m = exact_path_law(chain)
    assume(fkg_lattice_condition(m).holds)
    lower = data.draw(st.lists(st.integers(0, 4) | st.none(), min_size=n, max_size=n))
    upper = data.draw(st.lists(st.integers(0, 4) | st.none(), min_size=n, max_size=n))
    event = PathEvent.interval(lower, upper)
    kept = {p: w for p, w in m.atoms.items() if event.contains(p)}
    assume(kept)
    assert event_maxmin_stable(event, chain)
    cond = condition_on_event(chain, event).to_measure()
    assert fkg_lattice_condition(cond).holds


# counterexamples


@pytest.mark.parametrize("law", [power_law(2, 2), lazy_srw(F(1, 5))])
def test_counterexample(law):
    kernel = kernel_from_increments(law, (-20, 20))
    ce = construct_counterexample_paths(kernel, 0)
    assert ce.ratio < 1
    m = exact_path_law(ChainSpec(kernel, 0, ce.m))
    assert m(join(ce.u, ce.v)) * m(meet(ce.u, ce.v)) == ce.ratio * m(ce.u) * m(ce.v)
    assert not fkg_lattice_condition(m).holds


def test_counterexample_values():
    ce = construct_counterexample_paths(kernel_from_increments(power_law(2, 2), (-20, 20)), 0)
    assert (ce.m, ce.ratio) == (2, F(9, 16))
    ce = construct_counterexample_paths(kernel_from_increments(lazy_srw(F(1, 5)), (-20, 20)), 0)
    assert (ce.m, ce.ratio) == (2, F(1, 4))


def test_counterexample_precondition():
    with pytest.raises(PreconditionError):
        construct_counterexample_paths(kernel_from_increments(discrete_laplace("log(2)", 2), (-40, 40)), 0)
