from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def points(dim, lo=-4, hi=4):
    return st.tuples(*[st.integers(lo, hi)] * dim)


@st.composite
def small_measures(draw, dim=2, max_atoms=7, lo=0, hi=2):
    pts = draw(st.lists(points(dim, lo, hi), min_size=1, max_size=max_atoms, unique=True))
    ws = draw(st.lists(st.integers(1, 6), min_size=len(pts), max_size=len(pts)))
    tot = sum(ws)
    return {p: Fraction(w, tot) for p, w in zip(pts, ws)}


@st.composite
def increment_weights(draw, lo=-3, hi=3):
    support = draw(st.lists(st.integers(lo, hi), min_size=1, max_size=hi - lo + 1, unique=True))
    ws = draw(st.lists(st.integers(1, 9), min_size=len(support), max_size=len(support)))
    return dict(zip(support, ws))
