import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leafdim.errors import ConfigError
from leafdim.leaf import (AmbientBall, Indicator, LeafSubset, PeriodicOrbit, PointSet, UnionSet,
                          WholeTorus, ambient_set_from_spec, iterate_segment, leaf_ball,
                          trace_subset)
from leafdim.systems import TorusPoint, apply, cat2, paper3

from oracles import PAPER3_ROOTS

LAM_CAT = (3 + math.sqrt(5)) / 2


def test_leaf_ball_lengths():
    S = leaf_ball(cat2(), TorusPoint.origin(2), 0.1)
    assert S.length == pytest.approx(0.2)
    T = paper3(5)
    S3 = leaf_ball(T, TorusPoint.of("1/3", "1/5", "1/7"), 0.05)
    assert S3.length == pytest.approx(0.1)
    v = np.array(S3.direction)
    a = np.array(T.matrix, dtype=float)
    assert np.linalg.norm(a @ v - PAPER3_ROOTS[2] * v) < 1e-9


def test_leaf_ball_rejects_nonpositive():
    with pytest.raises(ValueError):
        leaf_ball(cat2(), TorusPoint.origin(2), 0.0)


def test_iterate_lengths():
    T = cat2()
    S = leaf_ball(T, TorusPoint.of("1/7", "3/7"), 0.1)
    assert iterate_segment(T, S, 0) == S
    assert iterate_segment(T, S, 1).length == pytest.approx(0.2 * LAM_CAT, rel=1e-12)
    assert iterate_segment(T, S, 3).length == pytest.approx(0.2 * LAM_CAT ** 3, rel=1e-9)


@pytest.mark.parametrize("T", [cat2(), paper3(5)])
def test_log_length_up_to_60(T):
    x = TorusPoint.origin(T.dim)
    S = leaf_ball(T, x, 0.1)
    lam = T.splitting.unstable_rate
    for n in (10, 30, 60):
        Sn = iterate_segment(T, S, n)
        assert Sn.log_length == pytest.approx(math.log(0.2) + n * math.log(lam), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 12), st.integers(0, 12))
def test_iterate_additive(a, b):
    T = paper3(5)
    S = leaf_ball(T, TorusPoint.of("1/9", "2/9", "4/9"), 0.07)
    lhs = iterate_segment(T, iterate_segment(T, S, a), b)
    rhs = iterate_segment(T, S, a + b)
    assert lhs.base == rhs.base and lhs.level == rhs.level


@pytest.mark.parametrize("T", [cat2(), paper3(5), paper3(5).inverse()])
def test_endpoint_images_two_ways(T):
    rng = np.random.default_rng(1)
    a = np.array(T.effective_matrix, dtype=float)
    for _ in range(20):
        x = TorusPoint(tuple(Fraction(int(k), 4096) for k in rng.integers(0, 4096, T.dim)))
        S = leaf_ball(T, x, float(rng.uniform(0.01, 0.2)))
        k = int(rng.integers(1, 6))
        Sk = iterate_segment(T, S, k)
        for t in (S.t_lo, S.t_hi):
            direct = Sk.point_at(t)
            p = x.to_array() + t * np.asarray(S.direction)
            for _ in range(k):
                p = a @ p
            diff = np.abs((direct - p + 0.5) % 1.0 - 0.5)
            assert diff.max() < 1e-9


def test_trace_whole_torus():
    T = cat2()
    S = leaf_ball(T, TorusPoint.of("1/3", "1/5"), 0.1)
    X = trace_subset(T, WholeTorus(), S)
    assert X.segments == [S]
    assert X.measure() == S.length


def test_trace_fixed_point():
    T = cat2()
    S = leaf_ball(T, TorusPoint.origin(2), 0.1)
    X = trace_subset(T, PointSet((TorusPoint.origin(2),)), S)
    assert X.points == (0.0,) and not X.intervals


def test_trace_ball_contains_center():
    T = paper3(5)
    c = TorusPoint.of("1/3", "1/5", "1/7")
    S = leaf_ball(T, c, 0.3)
    X = trace_subset(T, AmbientBall(c, 0.2), S)
    assert X.kind == "indicator"
    assert any(lo <= 0.0 <= hi for lo, hi in X.intervals)
    # leaf through the centre exits the ball at distance 0.2
    assert X.intervals[0] == pytest.approx((-0.2, 0.2), abs=S.length / 2000 / 50)


def test_trace_misses():
    T = cat2()
    S = leaf_ball(T, TorusPoint.of("1/2", "1/2"), 0.01)
    X = trace_subset(T, AmbientBall(TorusPoint.origin(2), 0.1), S)
    assert X.is_empty


def test_trace_periodic_orbit_point_on_other_part():
    T = cat2()
    p = TorusPoint.of("1/5", "2/5")
    orbit = PeriodicOrbit(p).orbit(T)
    assert apply(T, p, len(orbit)) == p
    X = trace_subset(T, PeriodicOrbit(p), leaf_ball(T, orbit[1], 0.05))
    assert 0.0 in X.points


def test_trace_indicator_and_union():
    T = cat2()
    S = leaf_ball(T, TorusPoint.origin(2), 0.2)
    half = Indicator(lambda pts: pts[:, 0] < 0.5, "x<1/2")
    X = trace_subset(T, half, S)
    assert X.resolution and X.resolution > 0
    Y = UnionSet((PointSet((TorusPoint.origin(2),)), AmbientBall(TorusPoint.of("1/2", "1/2"), 0.2)))
    assert trace_subset(T, Y, S).points == (0.0,)


def test_subset_union_and_iterate():
    T = cat2()
    S = leaf_ball(T, TorusPoint.origin(2), 0.2)
    a = LeafSubset(S, ((-0.2, 0.0),))
    b = LeafSubset(S, ((-0.05, 0.1),), points=(0.15,))
    u = a.union(b)
    assert u.intervals == ((-0.2, 0.1),) and u.points == (0.15,)
    assert u.measure() == pytest.approx(0.3)
    assert u.iterate(T, 2).measure() == pytest.approx(0.3 * LAM_CAT ** 2)


def test_indicator_needs_resolution():
    S = leaf_ball(cat2(), TorusPoint.origin(2), 0.1)
    with pytest.raises(ValueError):
        LeafSubset(S, ((0.0, 0.1),), kind="indicator")


@pytest.mark.parametrize("spec", [
    "torus",
    "ball:c=(1/3,1/5),r=0.25",
    "orbit:p=(1/5,2/5)",
    "points:[(0,0),(1/2,1/3)]",
    "orbit:p=(1/5,2/5)+ball:c=(1/2,1/2),r=0.25",
])
def test_set_spec_round_trip(spec):
    Y = ambient_set_from_spec(spec)
    assert ambient_set_from_spec(str(Y)) == Y


def test_set_spec_period_detect_flag():
    assert ambient_set_from_spec("orbit:p=(1/5,2/5),period-detect") == \
        PeriodicOrbit(TorusPoint.of("1/5", "2/5"))


@pytest.mark.parametrize("spec", [
    "sphere", "ball:c=(1/3,1/5)", "ball:c=(1/3,1/5),r=0.7", "ball:c=1/3,r=0.1",
    "points:[]", "points:(0,0)", "orbit:q=(0,0)", "ball:c=(1/0,0),r=0.1",
])
def test_set_spec_errors(spec):
    with pytest.raises(ConfigError) as info:
        ambient_set_from_spec(spec, "$.set_Y")
    assert info.value.where.startswith("$.set_Y")
