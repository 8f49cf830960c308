import math
from fractions import Fraction

import numpy as np
import pytest

from leafdim.errors import DegeneratePlaque
from leafdim.systems import TorusPoint, cat2, make_toral_automorphism, paper3
from leafdim.umetric import (InformationSample, conditional_information, cylinder_set,
                             metric_entropy_jacobian, plaque_through, random_rational_point,
                             smb_convergence_report)

from oracles import (CAT2_LOG_LAMBDA, PAPER3_INV_LOG_LAMBDA, PAPER3_LOG_CENTER, PAPER3_LOG_LAMBDA,
                     PAPER3_ROOTS, sampled_cylinder)

SYSTEMS = [cat2(), paper3(5), paper3(5).inverse()]
NEG = make_toral_automorphism([[-2, -1], [-1, -1]])  # unstable eigenvalue -2.618


def test_jacobian_values():
    assert metric_entropy_jacobian(cat2()) == pytest.approx(CAT2_LOG_LAMBDA, abs=1e-12)
    assert metric_entropy_jacobian(paper3(5)) == pytest.approx(PAPER3_LOG_LAMBDA, abs=1e-11)
    inv = metric_entropy_jacobian(paper3(5).inverse())
    assert inv == pytest.approx(PAPER3_INV_LOG_LAMBDA, abs=1e-11)
    assert abs(inv - (PAPER3_LOG_LAMBDA + PAPER3_LOG_CENTER)) <= 1e-9


def test_log_eigenvalues_sum_to_zero():
    s = paper3(5).splitting
    assert abs(sum(math.log(abs(l)) for l in s.eigenvalues)) <= 1e-9
    assert abs(sum(math.log(r) for r in PAPER3_ROOTS)) <= 1e-9


def test_plaque_normalised():
    eta = plaque_through(cat2(), TorusPoint.of("1/3", "1/5"), 16)
    assert eta.measure(eta.plaque.t_lo, eta.plaque.t_hi) == pytest.approx(1.0)
    assert eta.measure(-10, 10) == pytest.approx(1.0)
    assert eta.plaque.t_lo < 0 < eta.plaque.t_hi


def test_degenerate_plaque():
    with pytest.raises(DegeneratePlaque):
        plaque_through(cat2(), TorusPoint.of("1/4", "1/3"), 16)


def test_n_zero():
    assert conditional_information(cat2(), TorusPoint.of("1/3", "1/5"), 16, 0).value == 0.0


def test_information_sample_nonnegative():
    with pytest.raises(ValueError):
        InformationSample(TorusPoint.origin(2), 1, -0.1)


def check_against_sampling(T, x, m, n, res=1e-6):
    """Exact cylinder components agree with sampled membership runs."""
    eta = plaque_through(T, x, m).plaque
    exact = cylinder_set(T, x, m, n)
    runs = sampled_cylinder(T.effective_matrix, x.to_array(), T.direction,
                            (eta.t_lo, eta.t_hi), n, m, res)
    # every component longer than a few samples shows up as a run with the
    # same ends, and every run lies in a component
    for a, b in exact:
        if b - a > 3 * res:
            assert any(abs(sa - a) <= 1.01 * res and abs(sb - b) <= 1.01 * res for sa, sb in runs)
    for sa, sb in runs:
        assert any(a - 1e-12 <= sa and sb <= b + 1e-12 for a, b in exact)


@pytest.mark.parametrize("T", SYSTEMS + [NEG])
def test_cylinder_matches_sampling(T):
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 6:
        x = random_rational_point(rng, T.dim)
        m = int(rng.choice([2, 4, 8]))
        try:
            plaque_through(T, x, m)
        except DegeneratePlaque:
            continue
        for n in range(1, 9):
            check_against_sampling(T, x, m, n)
        checked += 1


def test_cylinder_can_have_several_components():
    # the plaque image wraps the torus and re-enters the box of the orbit point
    T = paper3(5)
    rng = np.random.default_rng(8)
    found = 0
    for _ in range(40):
        x = random_rational_point(rng, 3)
        if len(cylinder_set(T, x, 2, 3)) > 1:
            found += 1
            check_against_sampling(T, x, 2, 3)
    assert found > 0


def test_cylinder_contains_x():
    T = cat2()
    x = TorusPoint.of("1/3", "1/5")
    for n in (1, 5, 20):
        assert any(a <= 0.0 <= b for a, b in cylinder_set(T, x, 16, n))


@pytest.mark.parametrize("T", SYSTEMS)
def test_cylinders_shrink_and_bounds(T):
    rng = np.random.default_rng(9)
    m = 16
    log_lam = metric_entropy_jacobian(T)
    for _ in range(5):
        x = random_rational_point(rng, T.dim)
        prev = math.inf
        for n in range(1, 15):
            info = conditional_information(T, x, m, n)
            size = sum(b - a for a, b in info.cylinder)
            assert size <= prev * (1 + 1e-12)
            prev = size
            v = info.value
            assert 0 <= v <= log_lam + math.log(m) + 1


def test_smb_report_cat2():
    rep = smb_convergence_report(cat2(), samples=10, n_list=[10, 15, 20, 25], m=16)
    means = [r[1] for r in rep.rows]
    # at 10 samples the spread (about 0.08 at n=10) hides the 1/n drift
    # between neighbouring n, so only the ends are compared
    assert abs(means[-1] - CAT2_LOG_LAMBDA) < abs(means[0] - CAT2_LOG_LAMBDA)
    assert rep.tail_rate == pytest.approx(CAT2_LOG_LAMBDA, rel=0.05)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,mean_In_over_n,stddev,samples"
    assert lines[1].endswith(",10")
    sds = [r[2] for r in rep.rows]
    assert sds[-1] < sds[0]


def test_smb_report_paper3_approaches():
    rep = smb_convergence_report(paper3(5), samples=10, n_list=[10, 15, 20, 25], m=16)
    means = [r[1] for r in rep.rows]
    assert means == sorted(means)
    assert means[-1] < PAPER3_LOG_LAMBDA * 1.02
    assert abs(means[-1] - PAPER3_LOG_LAMBDA) < abs(means[0] - PAPER3_LOG_LAMBDA)


def test_smb_deterministic():
    a = smb_convergence_report(cat2(), samples=10, n_list=[5, 10], seed=3)
    b = smb_convergence_report(cat2(), samples=10, n_list=[5, 10], seed=3)
    assert a.to_csv() == b.to_csv()


def test_random_point_denominator():
    x = random_rational_point(np.random.default_rng(0), 3)
    assert all(c.denominator <= 2 ** 30 and 0 <= c < 1 for c in x.coords)
