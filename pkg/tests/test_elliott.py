import random
from fractions import Fraction

import pytest
from hypothesis import given

from conftest import random_rational_skew, rational_skew
from nctorus.elliott import (basis_certificate, double_factorial, elliott_generator, elliott_terms,
                             matching_sign, perfect_matchings, rational_lattice_reduce, trace_lattice)
from nctorus.scalar import BackendError, Poly
from nctorus.skewmat import SkewMatrix, even_subsets, pfaffian_minor


def test_matching_counts():
    for m in range(5):
        items = tuple(range(1, 2 * m + 1))
        ms = list(perfect_matchings(items))
        assert len(ms) == double_factorial(2 * m - 1) == len(set(ms))
        for mt in ms:
            assert all(a < b for a, b in mt)
            assert [a for a, _ in mt] == sorted(a for a, _ in mt)


def test_four_element_signs():
    signs = {m: matching_sign(m) for m in perfect_matchings((1, 2, 3, 4))}
    assert signs == {((1, 2), (3, 4)): 1, ((1, 3), (2, 4)): -1, ((1, 4), (2, 3)): 1}


def test_generator_equals_minor_symbolic():
    for n in range(1, 8):
        A = SkewMatrix.symbolic(n)
        for s in even_subsets(n):
            assert elliott_generator(A, s) == pfaffian_minor(A, s)
            assert len(elliott_terms(A, s)) == double_factorial(len(s) - 1)


@given(rational_skew(max_n=6))
def test_generator_equals_minor_rational(A):
    for s in even_subsets(A.n):
        assert elliott_generator(A, s) == pfaffian_minor(A, s)


def test_bad_subsets():
    A = SkewMatrix.symbolic(4)
    with pytest.raises(ValueError):
        elliott_generator(A, (1, 2, 3))
    with pytest.raises(ValueError):
        elliott_generator(A, (3, 1))
    with pytest.raises(ValueError):
        elliott_generator(A, (1, 5))


def test_three_dimensional_trace_range():
    lat = trace_lattice(SkewMatrix.symbolic(3))
    t = {s: Poly.symbol(s) for s in ("t12", "t13", "t23")}
    assert lat.values() == [1, t["t12"], t["t13"], t["t23"]]


def test_rational_lattice():
    A = SkewMatrix.from_upper(3, [Fraction(1, 2), Fraction(1, 3), Fraction(2, 5)])
    assert rational_lattice_reduce(trace_lattice(A)) == Fraction(1, 30)
    with pytest.raises(BackendError):
        rational_lattice_reduce(trace_lattice(SkewMatrix.symbolic(2)))


def test_basis_certificate_ranks():
    for n, rank in ((2, 2), (3, 4), (4, 8), (5, 16)):
        cert = basis_certificate(SkewMatrix.symbolic(n))
        assert cert.passed and cert.rank == rank and cert.witness is None


def test_basis_certificate_negative_control():
    rows = [list(r) for r in SkewMatrix.symbolic(4).rows]
    rows[0][3], rows[3][0] = rows[1][2], -rows[1][2]     # t14 := t23
    cert = basis_certificate(SkewMatrix(rows))
    assert not cert.passed
    assert cert.rank == 7 and cert.witness == (2, 3)


def test_basis_certificate_trace_mismatch():
    A = SkewMatrix.symbolic(3)
    traces = {s: pfaffian_minor(A, s) for s in even_subsets(3)}
    traces[(1, 3)] = -traces[(1, 3)]
    cert = basis_certificate(A, traces)
    assert cert.mismatches == [(1, 3)] and not cert.passed
    with pytest.raises(BackendError):
        basis_certificate(random_rational_skew(random.Random(0), 3))
