from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nctorus.scalar import (FLOAT, POLYNOMIAL, RATIONAL, BackendError, Poly, ScalarSyntaxError,
                            add, backend, coerce, common_backend, format_scalar, parse_scalar,
                            rank_over_q, rational_independence_rank, sign)

t12, t34, t13 = Poly.symbol("t12"), Poly.symbol("t34"), Poly.symbol("t13")
small = st.fractions(min_value=-5, max_value=5, max_denominator=7)


def poly_strategy():
    names = st.sampled_from(["a", "b", "c"])
    mono = st.lists(st.tuples(names, st.integers(1, 2)), max_size=2).map(tuple)
    return st.dictionaries(mono, small, max_size=4).map(
        lambda d: sum((c * _mono(m) for m, c in d.items()), Poly.constant(0)))


def _mono(m):
    out = Poly.constant(1)
    for name, e in m:
        out = out * Poly.symbol(name) ** e
    return out


def test_backends():
    assert backend(Fraction(1, 2)) == RATIONAL
    assert backend(0.5) == FLOAT
    assert backend(t12) == POLYNOMIAL
    assert common_backend([1, Fraction(1, 3), t12]) == POLYNOMIAL
    assert common_backend([1, 0.5]) == FLOAT
    with pytest.raises(BackendError):
        common_backend([0.5, Fraction(1, 2)])
    with pytest.raises(BackendError):
        add(0.5, Fraction(1, 2))
    with pytest.raises(BackendError):
        t12 * 0.5
    with pytest.raises(BackendError):
        backend(True)


def test_coerce():
    assert coerce(3, FLOAT) == 3.0 and isinstance(coerce(3, FLOAT), float)
    assert coerce(Fraction(1, 2), POLYNOMIAL) == Poly.constant(Fraction(1, 2))
    assert coerce(Poly.constant(2), RATIONAL) == 2
    with pytest.raises(BackendError):
        coerce(t12, RATIONAL)
    with pytest.raises(BackendError):
        coerce(0.5, RATIONAL)


def test_display_order():
    pf = t12 * t34 - t13 * Poly.symbol("t24") + Poly.symbol("t14") * Poly.symbol("t23")
    assert str(pf) == "t12*t34 - t13*t24 + t14*t23"
    assert str(Poly.constant(0)) == "0"
    assert str(-t12 + 1) == "1 - t12"


def test_constant_poly_equals_rational():
    assert Poly.constant(Fraction(3, 4)) == Fraction(3, 4)
    assert hash(Poly.constant(Fraction(3, 4))) == hash(Fraction(3, 4))
    assert t12 - t12 == 0


@given(poly_strategy(), poly_strategy(), poly_strategy())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == 0


@given(poly_strategy(), st.fractions(min_value=-3, max_value=3, max_denominator=5),
       st.fractions(min_value=-3, max_value=3, max_denominator=5))
def test_evaluation_is_a_homomorphism(a, x, y):
    vals = {"a": x, "b": y, "c": Fraction(1, 3)}
    sq = a * a
    assert sq.subs(vals) == a.subs(vals) ** 2


@pytest.mark.parametrize("text,expected", [
    ("3/4", Fraction(3, 4)), ("-2", Fraction(-2)), ("0.25", 0.25), ("1e-3", 0.001),
])
def test_parse_numbers(text, expected):
    v = parse_scalar(text)
    assert v == expected and type(v) is type(expected)


def test_parse_polynomials():
    assert parse_scalar("t12*t34 - 1/2*t13^2", ["t12", "t34", "t13"]) == t12 * t34 - Fraction(1, 2) * t13 ** 2
    with pytest.raises(ScalarSyntaxError):
        parse_scalar("t99", ["t12"])
    with pytest.raises(ScalarSyntaxError):
        parse_scalar("")
    with pytest.raises(ScalarSyntaxError):
        parse_scalar("__import__('os')", ["t12"])
    for bad in ("1/0", "-3/00", "t12/0"):
        with pytest.raises(ScalarSyntaxError):
            parse_scalar(bad, ["t12"])


@given(st.one_of(small, poly_strategy(), st.floats(-1e6, 1e6, allow_nan=False)))
def test_format_parse_round_trip(x):
    assert parse_scalar(format_scalar(x), ["a", "b", "c"]) == x


def test_rank_and_sign():
    assert rank_over_q([[1, 2], [2, 4]]) == 1
    assert rational_independence_rank([t12, t13, t12 + t13, Fraction(1)]) == 3
    assert sign(Fraction(-1, 3)) == -1 and sign(Poly.constant(2)) == 1
    with pytest.raises(ValueError):
        sign(t12)
    with pytest.raises(BackendError):
        rational_independence_rank([0.5])
