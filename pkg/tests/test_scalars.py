import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from nogo.scalars import SQRT2, Exact, Surd

fracs = st.fractions(min_value=-50, max_value=50, max_denominator=20)
surds = st.builds(Surd, fracs, fracs)
exacts = st.builds(Exact, surds, surds)


def approx(x: Exact) -> complex:
    return complex(x)


def test_sqrt2_squares_to_two():
    assert SQRT2 * SQRT2 == Exact(2)
    assert (SQRT2 * SQRT2 - 2).is_zero()


def test_orthogonality_needs_no_tolerance():
    # (1, 1, sqrt2) . (1, 1, -sqrt2) = 1 + 1 - 2
    u = [Exact(1), Exact(1), SQRT2]
    v = [Exact(1), Exact(1), -SQRT2]
    total = sum((a.conjugate() * b for a, b in zip(u, v)), Exact(0))
    assert total.is_zero()


def test_quad_roundtrip():
    x = Exact.from_quad([1, "-1/2", 0, 3])
    assert x.to_quad() == [1, "-1/2", 0, 3]
    with pytest.raises(ValueError):
        Exact.from_quad([1, 2, 3])


def test_floats_rejected():
    with pytest.raises(TypeError):
        Surd(0.5)


@given(exacts, exacts, exacts)
def test_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * (b * c) == (a * b) * c
    assert (a - a).is_zero()


@given(exacts, exacts)
def test_matches_complex_arithmetic(a, b):
    assert abs(approx(a * b) - approx(a) * approx(b)) <= 1e-9 * (1 + abs(approx(a) * approx(b)))
    assert abs(approx(a + b) - (approx(a) + approx(b))) <= 1e-9 * (1 + abs(approx(a)) + abs(approx(b)))


@given(exacts)
def test_division_inverts_multiplication(a):
    if a.is_zero():
        with pytest.raises(ZeroDivisionError):
            Exact(1) / a
    else:
        assert (Exact(1) / a) * a == Exact(1)


@given(surds)
def test_sign_matches_float(x):
    f = float(x)
    if abs(f) > 1e-9:
        assert x.sign() == (1 if f > 0 else -1)
    if x.is_zero():
        assert x.sign() == 0


def test_sign_edge_cases():
    assert Surd(3, -2).sign() == 1  # 3 - 2.83
    assert Surd(-3, 2).sign() == -1
    assert Surd(1, -1).sign() == -1
    assert Surd(Fraction(7, 5), -1).sign() == -1  # 1.4 < sqrt2
    assert Surd(Fraction(3, 2), -1).sign() == 1
    assert math.isclose(float(Surd(1, 1)), 1 + math.sqrt(2))
