import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fkglab.fkg import check_H1
from fkglab.markov import ChainSpec, PathEvent, condition_on_event, sample_conditioned
from fkglab.measures import MeasureError
from fkglab.processes import (
    LINEAR,
    RCLL,
    LevyTriplet,
    bessel_kernel,
    bessel_mean,
    interpolate,
    levy_check_association,
    sample_levy_path,
    scale_path,
)


def test_rcll_unrolled():
    f = interpolate([1, 0], T=1.0, mode=RCLL, x0=0)
    assert f(0.0) == 0 and f(0.49) == 0
    assert f(0.5) == 1 and f(0.99) == 1
    assert f(1.0) == 0


def test_linear_midpoints():
    f = interpolate([2, 0], T=2.0, mode=LINEAR)
    assert f(0.5) == pytest.approx(1.0) and f(1.5) == pytest.approx(1.0) and f(2.0) == 0


def test_constant_path():
    for mode in (RCLL, LINEAR):
        f = interpolate([3, 3, 3], mode=mode, x0=3)
        assert np.all(f(np.linspace(0, 1, 17)) == 3)


def test_interpolate_vector_path():
    f = interpolate([[1, 2], [3, 4]], mode=LINEAR, x0=[0, 0])
    assert np.allclose(f(0.25), [0.5, 1.0])


def test_interpolate_errors():
    with pytest.raises(ValueError):
        interpolate([], mode=RCLL)
    with pytest.raises(ValueError):
        interpolate([1], mode="cubic")


def test_scale_examples():
    assert np.array_equal(scale_path([2, 4], 4), [1.0, 2.0])
    assert np.array_equal(scale_path([0, 0, 0], 9), [0, 0, 0])
    with pytest.raises(ValueError):
        scale_path([1], 0)


paths = st.lists(st.integers(-5, 5), min_size=1, max_size=8)


@given(paths, st.data(), st.sampled_from([RCLL, LINEAR]), st.floats(0.1, 5))
def test_interpolation_and_scaling_monotone(u, data, mode, T):
    d = data.draw(st.lists(st.integers(0, 3), min_size=len(u), max_size=len(u)))
    v = [a + b for a, b in zip(u, d)]
    ts = np.linspace(0, T, 23)
    assert np.all(interpolate(u, T, mode)(ts) <= interpolate(v, T, mode)(ts) + 1e-12)
    assert np.all(scale_path(u, len(u)) <= scale_path(v, len(u)))


def test_bessel_half_is_reflected_srw():
    k = bessel_kernel(F(-1, 2), 10)
    assert all(k.p(i, i + 1) == F(1, 2) for i in range(1, 10))
    assert k.p(0, 1) == 1


def test_bessel_nu0():
    assert bessel_kernel(0, 10).p(1, 2) == F(3, 4)


def test_bessel_clamp():
    k = bessel_kernel(2, 10)
    assert k.p(1, 2) == 1 and k.p(1, 0) == 0
    assert k.p(2, 3) == 1
    assert k.p(3, 4) == F(11, 12)


def test_bessel_errors():
    with pytest.raises(MeasureError):
        bessel_kernel(-1, 10)
    with pytest.raises(MeasureError):
        bessel_kernel(0, 1)


@given(st.fractions(F(-9, 10), 4).filter(lambda x: x > -1), st.integers(2, 15), st.integers(1, 6), st.data())
def test_bessel_rows_and_h1(nu, M, n, data):
    k = bessel_kernel(nu, M)
    assert all(sum(k.row(i).values()) == 1 for i in k.window)
    assert all(abs(y - i) == 1 for i in k.window for y in k.row(i))
    start = data.draw(st.integers(0, M))
    assert check_H1(k, start, n).holds


def test_bessel_mean_formula():
    # dimension 1: |N(0,T)| has mean sqrt(2T/pi)
    assert bessel_mean(-0.5, 2.0) == pytest.approx(math.sqrt(4 / math.pi))
    assert bessel_mean(0, 1.0) == pytest.approx(math.sqrt(math.pi / 2))


def test_bessel_chain_mean_near_limit():
    n = 400
    law = condition_on_event(ChainSpec(bessel_kernel(0, n + 2), 0, n), PathEvent.full())
    X = sample_conditioned(law, 99, 20_000)
    est = X[:, -1].mean() / math.sqrt(n)
    assert abs(est - bessel_mean(0, 1.0)) < 0.05


def test_levy_d1_associated():
    t = LevyTriplet([1.0], [[2.0]], [((-3.0,), 1.0), ((2.0,), 0.5)])
    assert levy_check_association(t).associated


def test_levy_negative_sigma():
    v = levy_check_association(LevyTriplet([0, 0], [[1, -0.5], [-0.5, 1]]))
    assert not v.associated and v.failed_condition == "gaussian_sign"
    assert v.witness["sigma_ij"] == -0.5


def test_levy_mixed_jump():
    v = levy_check_association(LevyTriplet([0, 0], np.eye(2), [((1, -1), 1.0)]))
    assert not v.associated and v.failed_condition == "jump_quadrant"
    assert v.witness["atom"] == [1.0, -1.0]


def test_levy_invalid_sigma():
    with pytest.raises(MeasureError):
        LevyTriplet([0, 0], [[1, 2], [2, 1]])
    with pytest.raises(MeasureError):
        LevyTriplet([0, 0], [[1, 0.1], [0, 1]])
    with pytest.raises(MeasureError):
        LevyTriplet([0], [[1]], [((1,), 0.0)])


@st.composite
def triplets(draw, d=3):
    A = np.array(draw(st.lists(st.integers(-2, 2), min_size=d * d, max_size=d * d)), dtype=float).reshape(d, d)
    sigma = A @ A.T
    jumps = draw(st.lists(
        st.tuples(st.lists(st.integers(-2, 2), min_size=d, max_size=d), st.integers(1, 3)), max_size=3
    ))
    drift = draw(st.lists(st.integers(-2, 2), min_size=d, max_size=d))
    return LevyTriplet(drift, sigma, [(a, r) for a, r in jumps])


@given(triplets(), st.permutations(range(3)))
def test_levy_classifier_invariance(t, perm):
    base = levy_check_association(t).associated
    assert levy_check_association(t.permuted(perm)).associated == base
    assert levy_check_association(t.flipped()).associated == base


@given(triplets())
def test_levy_json_roundtrip(t):
    back = LevyTriplet.from_json(json.loads(json.dumps(t.to_json())))
    assert np.array_equal(back.sigma, t.sigma) and np.array_equal(back.atoms, t.atoms)


def test_zero_triplet_paths():
    t = LevyTriplet([0, 0], np.zeros((2, 2)))
    assert not sample_levy_path(t, 1.0, 8, 1, 50).any()


def test_levy_jump_mean():
    t = LevyTriplet([0, 0], np.zeros((2, 2)), [((1, -1), 1.0)])
    X = sample_levy_path(t, 1.0, 4, 2, 100_000)
    assert X.shape == (100_000, 4, 2)
    assert np.allclose(X[:, -1].mean(axis=0), [1, -1], atol=0.02)


def test_levy_brownian_variance():
    T, N = 2.0, 100_000
    X = sample_levy_path(LevyTriplet([0.0], [[1.0]]), T, 10, 5, N)[:, -1, 0]
    v = X.var(ddof=1)
    se = T * math.sqrt(2 / (N - 1))
    assert abs(v - T) < 3 * se


def test_levy_sampler_deterministic():
    t = LevyTriplet([0.5, 0], [[1, 0.3], [0.3, 2]], [((1, 1), 2.0)])
    assert np.array_equal(sample_levy_path(t, 1.0, 5, 42, 100), sample_levy_path(t, 1.0, 5, 42, 100))
