"""Product order on integer vectors: join/meet, max/min stability, up-sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

Point = tuple[int, ...]

DEFAULT_UPSET_CAP = 20


class DimensionError(ValueError):
    pass


class CapExceeded(ValueError):
    """A desk-scale enumeration was asked to run past its configured cap."""


def as_point(u: Iterable[int]) -> Point:
    p = tuple(int(x) for x in u)
    if not p:
        raise DimensionError("points need dimension >= 1")
    return p


def _check_dims(u: Sequence[int], v: Sequence[int]) -> None:
    if len(u) != len(v):
        raise DimensionError(f"dimension mismatch: {len(u)} vs {len(v)}")


def join(u: Sequence[int], v: Sequence[int]) -> Point:
    _check_dims(u, v)
    return tuple(a if a >= b else b for a, b in zip(u, v))


def meet(u: Sequence[int], v: Sequence[int]) -> Point:
    _check_dims(u, v)
    return tuple(a if a <= b else b for a, b in zip(u, v))


def leq(u: Sequence[int], v: Sequence[int]) -> bool:
    """Product order: u <= v coordinatewise."""
    _check_dims(u, v)
    return all(a <= b for a, b in zip(u, v))


def comparable(u: Sequence[int], v: Sequence[int]) -> bool:
    return leq(u, v) or leq(v, u)


@dataclass(frozen=True)
class FinitePoset:
    """Finite set of equal-dimension points under the product order."""

    elements: tuple[Point, ...]

    def __init__(self, elements: Iterable[Iterable[int]]):
        pts = tuple(sorted({as_point(e) for e in elements}))
        if pts and len({len(p) for p in pts}) != 1:
            raise DimensionError("poset elements must share one dimension")
        object.__setattr__(self, "elements", pts)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, u) -> bool:
        return tuple(u) in self._index

    @property
    def _index(self) -> dict[Point, int]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {p: i for i, p in enumerate(self.elements)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def index(self, u: Sequence[int]) -> int:
        return self._index[tuple(u)]

    def strictly_above(self) -> list[list[int]]:
        """For each element i, indices j with elements[i] < elements[j]."""
        els = self.elements
        return [
            [j for j, q in enumerate(els) if j != i and leq(p, q)]
            for i, p in enumerate(els)
        ]


@dataclass(frozen=True)
class UpSet:
    poset: FinitePoset
    members: frozenset[Point]

    def __contains__(self, u) -> bool:
        return tuple(u) in self.members

    def __len__(self) -> int:
        return len(self.members)

    def is_valid(self) -> bool:
        for u in self.members:
            for v in self.poset.elements:
                if leq(u, v) and v not in self.members:
                    return False
        return True


def is_maxmin_stable(
    event: Iterable[Iterable[int]], ambient: FinitePoset
) -> tuple[bool, tuple[Point, Point] | None]:
    """Closure of ``event`` under join and meet, computed inside ``ambient``.

    Returns ``(True, None)`` or ``(False, (u, v))`` for the first violating
    pair in lexicographic order.
    """
    ev = sorted({as_point(u) for u in event})
    for u in ev:
        if u not in ambient:
            raise ValueError(f"event point {u} not in ambient poset")
    members = set(ev)
    for i, u in enumerate(ev):
        for v in ev[i + 1 :]:
            if comparable(u, v):
                continue
            if join(u, v) not in members or meet(u, v) not in members:
                return False, (u, v)
    return True, None


def upset_masks(poset: FinitePoset, cap: int = DEFAULT_UPSET_CAP) -> Iterator[int]:
    """Yield every up-set of ``poset`` once, as a bitmask over ``poset.elements``.

    Elements are decided from the top down; an element may join the set only
    when everything strictly above it already has.
    """
    n = len(poset)
    if n > cap:
        raise CapExceeded(f"poset has {n} elements, up-set cap is {cap}")
    above = poset.strictly_above()
    # decreasing number of elements above == a valid top-down order
    order = sorted(range(n), key=lambda i: len(above[i]))
    above_mask = [sum(1 << j for j in above[i]) for i in range(n)]

    def rec(k: int, mask: int) -> Iterator[int]:
        if k == n:
            yield mask
            return
        i = order[k]
        yield from rec(k + 1, mask)
        if mask & above_mask[i] == above_mask[i]:
            yield from rec(k + 1, mask | (1 << i))

    yield from rec(0, 0)


def enumerate_upsets(poset: FinitePoset, cap: int = DEFAULT_UPSET_CAP) -> Iterator[UpSet]:
    els = poset.elements
    for mask in upset_masks(poset, cap):
        yield UpSet(poset, frozenset(els[i] for i in range(len(els)) if mask >> i & 1))
