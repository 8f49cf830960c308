import math
from fractions import Fraction

import numpy as np
import pytest

from leafdim.covers import (GridCover, checked_offsets, counts_within_budget, minimal_bowen_cover,
                            n_orbit_thinner, thinner_than)
from leafdim.errors import CountBudgetExceeded
from leafdim.leaf import LeafSegment, LeafSubset, iterate_segment, leaf_ball
from leafdim.systems import TorusPoint, cat2, make_toral_automorphism, paper3

from oracles import brute_force_cover_count

NEG = make_toral_automorphism([[-2, -1], [-1, -1]])  # unstable eigenvalue -2.618
SYSTEMS = [cat2(), paper3(5), paper3(5).inverse(), NEG]


def random_segment(T, rng, max_len=0.3):
    x = TorusPoint(tuple(Fraction(int(k), 2 ** 20) for k in rng.integers(0, 2 ** 20, T.dim)))
    L = float(10 ** rng.uniform(-6, math.log10(max_len)))
    a = float(rng.uniform(-L, 0))
    return leaf_ball(T, x, 1.0).sub(a, a + L)


def test_grid_cover_validation():
    with pytest.raises(ValueError):
        GridCover(1)
    with pytest.raises(ValueError):
        GridCover(8, inflation=1.0)
    with pytest.raises(ValueError):
        GridCover(8, inflation=2.0)
    A = GridCover(8)
    assert A.side == pytest.approx(A.inflation / 8)


def test_thinner_examples():
    A = GridCover(8)
    centre = TorusPoint.of("1/16", "1/16")
    long = LeafSegment(centre, (1.0, 0.0), -A.side, A.side)
    assert not thinner_than(long, A)
    assert thinner_than(LeafSegment(centre, (0.6, 0.8), 0.0, 0.0), A)
    short = LeafSegment(centre, (1.0, 0.0), -0.2 * A.side, 0.2 * A.side)
    assert thinner_than(short, A)


def test_thinner_across_wrap():
    A = GridCover(4)
    # x-extent [0.8875, 1.0875] sits in the cell centred at 7/8, which wraps past 1
    S = LeafSegment(TorusPoint.of("15/16", "1/8"), (1.0, 0.0), -0.05, 0.15)
    assert thinner_than(S, A)
    # a grid corner lies between cells: no cell holds a segment of length 0.2 around it
    assert not thinner_than(LeafSegment(TorusPoint.of("0", "0"), (1.0, 0.0), -0.1, 0.1), A)


def test_not_thinner_gives_zero():
    T = cat2()
    A = GridCover(8)
    S = leaf_ball(T, TorusPoint.origin(2), 0.5)
    assert n_orbit_thinner(T, S, A) == 0


def test_degenerate_is_capped():
    T = cat2()
    S = leaf_ball(T, TorusPoint.origin(2), 0.1).sub(0.0, 0.0)
    assert n_orbit_thinner(T, S, GridCover(8), n_max=17, return_capped=True) == (17, True)


@pytest.mark.parametrize("T", SYSTEMS)
def test_shift_identity(T):
    rng = np.random.default_rng(11)
    for m in (4, 8, 16):
        A = GridCover(m, dim=T.dim)
        for _ in range(40):
            S = random_segment(T, rng)
            n = n_orbit_thinner(T, S, A)
            if n >= 1:
                assert n_orbit_thinner(T, iterate_segment(T, S, 1), A) == n - 1


@pytest.mark.parametrize("T", SYSTEMS)
@pytest.mark.parametrize("p", [2, 3])
def test_power_identity(T, p):
    # (f^p)^k(S) is thin iff p*k < n, so n under f^p counts k in [0, n/p): ceil(n/p)
    rng = np.random.default_rng(12 + p)
    A = GridCover(8, dim=T.dim)
    Tp = T.power(p)
    for _ in range(40):
        S = random_segment(T, rng)
        assert n_orbit_thinner(Tp, S, A) == -(-n_orbit_thinner(T, S, A) // p)


def test_power_identity_example():
    T = paper3(5).inverse()
    A = GridCover(8, dim=3)
    S = leaf_ball(T, TorusPoint.of("1/3", "1/5", "1/7"), 1.0).sub(0.0, 3e-5)
    n = n_orbit_thinner(T, S, A)
    assert n % 3 != 0
    # iterates 0, 3, ..., 3*(ceil(n/3)-1) of f are all below n
    assert n_orbit_thinner(T.power(3), S, A) == n // 3 + 1


@pytest.mark.parametrize("T", SYSTEMS)
def test_antitone(T):
    rng = np.random.default_rng(3)
    A = GridCover(8, dim=T.dim)
    for _ in range(40):
        S = random_segment(T, rng)
        w = S.t_hi - S.t_lo
        a, b = sorted(rng.uniform(0, 1, 2))
        inner = S.sub(S.t_lo + a * w, S.t_lo + b * w)
        assert n_orbit_thinner(T, inner, A) >= n_orbit_thinner(T, S, A)


def test_checked_offsets_cover_top():
    T = cat2()
    A = GridCover(8)
    assert checked_offsets(T, A, 5)[0] == 4
    assert A.is_monotone_for(T)


def test_single_point_count():
    T = cat2()
    S = leaf_ball(T, TorusPoint.origin(2), 0.1)
    X = LeafSubset(S, points=(0.0,))
    for n in (1, 5, 40):
        assert minimal_bowen_cover(T, X, GridCover(8), n).count == 1


def test_empty_subset_rejected():
    S = leaf_ball(cat2(), TorusPoint.origin(2), 0.1)
    with pytest.raises(ValueError):
        minimal_bowen_cover(cat2(), LeafSubset.empty(S), GridCover(8), 3)


@pytest.mark.parametrize("T", SYSTEMS)
def test_counts_monotone_and_bounded(T):
    lam = T.splitting.unstable_rate
    for m in (8, 16):
        A = GridCover(m, dim=T.dim)
        X = LeafSubset.from_segment(leaf_ball(T, TorusPoint.of(*(["1/3"] * T.dim)), 0.1))
        prev = 0
        for n in range(1, 9):
            c = minimal_bowen_cover(T, X, A, n).count
            assert c >= prev
            assert c <= math.ceil(X.measure() * lam ** n * m / A.inflation) + 1
            prev = c


def test_pieces_cover_and_are_bowen():
    T = paper3(5)
    A = GridCover(8, dim=3)
    S = leaf_ball(T, TorusPoint.of("1/3", "1/5", "1/7"), 0.05)
    X = LeafSubset(S, ((-0.05, -0.01), (0.02, 0.05)))
    bc = minimal_bowen_cover(T, X, A, 3, record=True)
    assert bc.pieces.shape == (bc.count, 2)
    for lo, hi in bc.pieces:
        assert n_orbit_thinner(T, S.sub(lo, hi), A) >= 3
    for lo, hi in X.intervals:
        for t in np.linspace(lo, hi, 50):
            assert any(p_lo <= t <= p_hi for p_lo, p_hi in bc.pieces)


def test_cat2_count_growth_rate():
    T = cat2()
    X = LeafSubset.from_segment(leaf_ball(T, TorusPoint.origin(2), 0.1))
    pts = counts_within_budget(T, X, GridCover(16), 1, 20, 2_000_000)
    n1, c1 = pts[-5]
    n2, c2 = pts[-1]
    assert (math.log(c2) - math.log(c1)) / (n2 - n1) == pytest.approx(0.9624, rel=0.03)


def test_budget_exceeded():
    T = cat2()
    X = LeafSubset.from_segment(leaf_ball(T, TorusPoint.origin(2), 0.1))
    with pytest.raises(CountBudgetExceeded):
        minimal_bowen_cover(T, X, GridCover(8), 15, max_count=100)
    assert counts_within_budget(T, X, GridCover(8), 1, 30, 100)[-1][1] <= 100


@pytest.mark.parametrize("T", SYSTEMS)
def test_matches_brute_force(T):
    rng = np.random.default_rng(21)
    lam = T.unstable_sign * T.splitting.unstable_rate
    for _ in range(8):
        n = int(rng.integers(1, 7))
        m = int(rng.choice([4, 8]))
        x = TorusPoint(tuple(Fraction(int(k), 2 ** 16) for k in rng.integers(0, 2 ** 16, T.dim)))
        L = min(0.2, 20 / (m * abs(lam) ** (n - 1))) * float(rng.uniform(0.1, 1.0))
        a = float(rng.uniform(-L, 0))
        A = GridCover(m, dim=T.dim)
        X = LeafSubset.from_segment(leaf_ball(T, x, 1.0).sub(a, a + L))
        expected = brute_force_cover_count(T.effective_matrix, x.to_array(), T.direction, lam,
                                           a, a + L, n, m, A.inflation, steps_per_piece=2000)
        assert minimal_bowen_cover(T, X, A, n).count == expected


def test_negative_eigenvalue_orientation():
    # an asymmetric segment flips side each step; the exact check sees it
    T = NEG
    S = leaf_ball(T, TorusPoint.of("1/3", "1/5"), 1.0).sub(0.0, 0.01)
    S1 = iterate_segment(T, S, 1)
    assert S1.scale < 0 and S1.length == pytest.approx(0.01 * 2.618034, rel=1e-6)
    lo = S1.point_at(0.01)
    direct = (np.array([[-2, -1], [-1, -1]]) @ S.point_at(0.01)) % 1.0
    assert np.allclose(lo, direct)
