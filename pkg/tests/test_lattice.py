import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import points
from fkglab.lattice import (
    CapExceeded,
    DimensionError,
    FinitePoset,
    enumerate_upsets,
    is_maxmin_stable,
    join,
    leq,
    meet,
)


@pytest.mark.parametrize(
    "u,v,j,m",
    [
        ((1, 5), (3, 2), (3, 5), (1, 2)),
        ((0, 0), (0, 0), (0, 0), (0, 0)),
        ((-1, 2, 0), (1, -2, 0), (1, 2, 0), (-1, -2, 0)),
    ],
)
def test_join_meet_examples(u, v, j, m):
    assert join(u, v) == j
    assert meet(u, v) == m


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        join((1, 2), (1, 2, 3))


square = FinitePoset(itertools.product([0, 1], repeat=2))


def test_stable_chain_in_square():
    assert is_maxmin_stable({(0, 0), (1, 1)}, square) == (True, None)


def test_antichain_not_stable():
    ok, w = is_maxmin_stable({(0, 1), (1, 0)}, square)
    assert not ok and set(w) == {(0, 1), (1, 0)}


def test_bridge_paths_stable():
    paths = FinitePoset([(1, 0), (-1, 0), (1, 2), (-1, -2)])
    assert is_maxmin_stable({(1, 0), (-1, 0)}, paths)[0]


def test_event_outside_ambient():
    with pytest.raises(ValueError):
        is_maxmin_stable({(5, 5)}, square)


@pytest.mark.parametrize(
    "elements,count",
    [([(0,)], 2), ([(0, 1), (1, 0)], 4), (list(itertools.product([0, 1], repeat=2)), 6)],
)
def test_upset_counts(elements, count):
    assert sum(1 for _ in enumerate_upsets(FinitePoset(elements))) == count


def test_upsets_include_empty_and_full():
    ups = {u.members for u in enumerate_upsets(square)}
    assert frozenset() in ups and frozenset(square.elements) in ups


def test_upset_cap():
    with pytest.raises(CapExceeded):
        list(enumerate_upsets(FinitePoset([(i,) for i in range(21)])))
    assert sum(1 for _ in enumerate_upsets(FinitePoset([(i,) for i in range(21)]), cap=21)) == 22


def _brute_upsets(poset):
    els = poset.elements
    out = set()
    for bits in itertools.product([0, 1], repeat=len(els)):
        s = {e for e, b in zip(els, bits) if b}
        if all(v in s for u in s for v in els if leq(u, v)):
            out.add(frozenset(s))
    return out


@given(st.lists(points(2, 0, 2), min_size=1, max_size=8, unique=True))
def test_upsets_match_bruteforce(elements):
    poset = FinitePoset(elements)
    got = [u.members for u in enumerate_upsets(poset)]
    assert len(got) == len(set(got))
    assert set(got) == _brute_upsets(poset)


@given(st.integers(1, 12))
def test_chain_and_antichain_counts(n):
    chain = FinitePoset([(i, i) for i in range(n)])
    anti = FinitePoset([(i, -i) for i in range(n)])
    assert sum(1 for _ in enumerate_upsets(chain)) == n + 1
    assert sum(1 for _ in enumerate_upsets(anti)) == 2**n


@given(st.lists(points(2, 0, 3), min_size=1, max_size=7, unique=True))
def test_enumerated_upsets_are_valid(elements):
    assert all(u.is_valid() for u in enumerate_upsets(FinitePoset(elements)))


@given(points(3), points(3), points(3))
def test_lattice_laws(u, v, w):
    assert join(u, v) == join(v, u) and meet(u, v) == meet(v, u)
    assert join(join(u, v), w) == join(u, join(v, w))
    assert meet(meet(u, v), w) == meet(u, meet(v, w))
    assert join(u, u) == u == meet(u, u)
    assert join(u, meet(u, v)) == u == meet(u, join(u, v))
    assert leq(meet(u, v), u) and leq(u, join(u, v))
