import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leafdim.errors import (ComplexSpectrum, MultipleUnstable, NoUnstableDirection,
                            NotUnimodular, UnsupportedDimension)
from leafdim.systems import (ToralAutomorphism, TorusPoint, apply, cat2, characteristic_polynomial,
                             compute_splitting, integer_inverse, make_toral_automorphism,
                             matrix_power, paper3, real_roots, system_from_spec,
                             unstable_jacobian)

from oracles import PAPER3_ROOTS

# Frozen from a 30-digit polynomial root solve.
PAPER3_EIGS = (0.3079785283699041, 0.6431041321077906, 5.048917339522305)
CAT2_EIGS = ((3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2)
K0_LARGEST = {6: 6.032934428, 7: 7.023636286, 8: 8.017772437}


def test_make_accepts_examples():
    assert cat2().det_sign == 1
    assert paper3(5).det_sign == 1
    assert make_toral_automorphism([[0, 1], [1, 1]]).det_sign == -1


def test_make_rejects():
    with pytest.raises(NotUnimodular):
        make_toral_automorphism([[2, 0], [0, 2]])
    with pytest.raises(UnsupportedDimension):
        make_toral_automorphism([[1]])
    with pytest.raises(UnsupportedDimension):
        make_toral_automorphism([[1, 0], [0, 1, 0]])


def test_characteristic_polynomials():
    assert characteristic_polynomial(cat2().matrix) == (1, -3, 1)
    for k0 in (5, 6, 7, 8):
        assert characteristic_polynomial(paper3(k0).matrix) == (1, -(k0 + 1), k0, -1)


def test_cat2_splitting():
    s = cat2().splitting
    assert s.bundle_labels == ("stable", "unstable")
    np.testing.assert_allclose(s.eigenvalues, CAT2_EIGS, atol=1e-12)
    assert s.unstable_rate == pytest.approx(2.618034, abs=1e-6)


def test_paper3_splitting():
    s = paper3(5).splitting
    assert s.bundle_labels == ("stable", "center", "unstable")
    np.testing.assert_allclose(s.eigenvalues, PAPER3_EIGS, atol=1e-11)
    np.testing.assert_allclose(s.eigenvalues, PAPER3_ROOTS, atol=1e-11)
    assert abs(np.prod(s.eigenvalues) - 1) <= 1e-10


@pytest.mark.parametrize("k0", [5, 6, 7, 8])
def test_paper3_family_ordering(k0):
    s = paper3(k0).splitting
    ls, lc, lu = s.eigenvalues
    assert 0 < ls < lc < 1 < lu
    if k0 in K0_LARGEST:
        assert lu == pytest.approx(K0_LARGEST[k0], abs=1e-8)


@pytest.mark.parametrize("T", [cat2(), paper3(5), paper3(6), paper3(5).inverse()])
def test_eigen_residuals(T):
    s = T.splitting
    a = np.array(T.matrix, dtype=float)
    for lam, v in zip(s.eigenvalues, s.eigenvectors):
        assert np.linalg.norm(a @ np.array(v) - lam * np.array(v)) <= 1e-10
        assert np.linalg.norm(v) == pytest.approx(1.0)
    assert abs(np.prod(np.abs(s.eigenvalues)) - 1) <= 1e-10


def test_inverse_splitting_rates():
    f = paper3(5)
    inv = f.inverse()
    s = inv.splitting
    assert s.unstable_rate == pytest.approx(1 / PAPER3_EIGS[0], rel=1e-11)
    # the unstable direction of the inverse is the stable direction of f
    v_inv = np.array(inv.direction)
    v_s = np.array(f.splitting.eigenvectors[0])
    assert abs(abs(v_inv @ v_s) - 1) < 1e-10
    assert unstable_jacobian(inv) == pytest.approx(1 / f.splitting.rate("stable"))


def test_splitting_errors():
    with pytest.raises(ComplexSpectrum):
        compute_splitting(make_toral_automorphism([[0, -1], [1, 0]]))
    with pytest.raises(ComplexSpectrum):
        compute_splitting(make_toral_automorphism([[1, 1], [0, 1]]))  # double root 1
    # unreachable for unimodular input; built directly to exercise the check
    with pytest.raises(NoUnstableDirection):
        compute_splitting(ToralAutomorphism(((0, 0), (0, 1))))
    # two expanding directions
    with pytest.raises(MultipleUnstable):
        compute_splitting(make_toral_automorphism([[0, 0, 1], [1, 0, -8], [0, 1, 6]]))


def test_real_roots_quadratic():
    np.testing.assert_allclose(real_roots((1, -3, 1)), sorted(CAT2_EIGS), atol=1e-12)


def test_apply_examples():
    T = cat2()
    assert apply(T, TorusPoint.origin(2), 10) == TorusPoint.origin(2)
    assert apply(T, TorusPoint.of("1/2", "1/2"), 1) == TorusPoint.of("1/2", "0")


def test_integer_inverse():
    a = paper3(5).matrix
    assert matrix_power(a, 1) == a
    prod = tuple(tuple(sum(a[i][k] * integer_inverse(a)[k][j] for k in range(3)) for j in range(3))
                 for i in range(3))
    assert prod == ((1, 0, 0), (0, 1, 0), (0, 0, 1))


fractions = st.fractions(min_value=0, max_value=1, max_denominator=10 ** 6)


@settings(max_examples=100, deadline=None)
@given(st.lists(fractions, min_size=3, max_size=3), st.integers(-8, 8))
def test_apply_invertible(coords, k):
    for T in (cat2(), paper3(5)):
        x = TorusPoint(tuple(coords[:T.dim]))
        assert apply(T, apply(T, x, k), -k) == x


@settings(max_examples=50, deadline=None)
@given(st.lists(fractions, min_size=3, max_size=3), st.integers(0, 6), st.integers(0, 6))
def test_apply_additive(coords, a, b):
    T = paper3(5)
    x = TorusPoint(tuple(coords))
    assert apply(T, apply(T, x, a), b) == apply(T, x, a + b)


def test_torus_point_reduction():
    p = TorusPoint.of(Fraction(5, 4), Fraction(-1, 3))
    assert p.coords == (Fraction(1, 4), Fraction(2, 3))
    assert str(p) == "(1/4,2/3)"


def test_powers_share_primitive_rate():
    T = cat2()
    T2 = T.power(2)
    assert T2.stride == 2
    assert T2.log_rate == T.log_rate
    assert T2.splitting.unstable_rate == pytest.approx(CAT2_EIGS[1] ** 2)
    assert apply(T2, TorusPoint.of("1/7", "2/7"), 3) == apply(T, TorusPoint.of("1/7", "2/7"), 6)


def test_system_specs():
    assert system_from_spec("cat2").matrix == cat2().matrix
    assert system_from_spec("paper3:k0=6").matrix == paper3(6).matrix
    inv = system_from_spec("paper3:k0=5:inverse")
    assert inv.center_may_expand and inv.matrix == integer_inverse(paper3(5).matrix)
    assert system_from_spec("matrix:[2,1,1,1]").matrix == cat2().matrix
    assert system_from_spec("cat2:power=3").stride == 3
    with pytest.raises(ValueError):
        system_from_spec("nosuch")
    with pytest.raises(NotUnimodular):
        system_from_spec("matrix:[2,0,0,2]")
