"""Shifting a skew matrix by multiples of Z until every pfaffian minor is positive.

``Z`` has every entry above the diagonal equal to 1.  Each pfaffian minor of
``A + tZ`` on a subset of size ``2l`` is a monic degree-``l`` polynomial in ``t``,
so all minors become positive for large ``t``.  The Cauchy root bound of those
polynomials turns that existence statement into a terminating search, and the
search returns the smallest non-negative integer shift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .cocycle import cohomology_invariant
from .scalar import POLYNOMIAL, RATIONAL, BackendError, Poly
from .skewmat import SkewMatrix, all_pfaffian_minors, even_subsets, _pfaffian_expansion

SHIFT_SYMBOL = "t"


def z_matrix(n: int) -> SkewMatrix:
    if n < 1:
        raise ValueError("Z is defined for n >= 1")
    return SkewMatrix([[Fraction((i < j) - (i > j)) for j in range(n)] for i in range(n)])


def shifted(A: SkewMatrix, t) -> SkewMatrix:
    """``A + t Z`` (``t`` an integer, rational or polynomial)."""
    Z = z_matrix(A.n)
    return SkewMatrix([[A[i, j] + t * Z[i, j] for j in range(A.n)] for i in range(A.n)], A.p, A.q)


def _require_rational(A: SkewMatrix):
    if A.backend != RATIONAL:
        raise BackendError("positivity shift needs exact rational entries")


def shift_polynomials(A: SkewMatrix) -> dict:
    """Pfaffian minor of ``A + tZ`` as a polynomial in ``t``, for every nonempty even subset."""
    _require_rational(A)
    t = Poly.symbol(SHIFT_SYMBOL)
    At = shifted(A.map(Poly.constant), t)
    cache: dict = {}
    return {s: _pfaffian_expansion(At.rows, tuple(i - 1 for i in s), POLYNOMIAL, cache)
            for s in even_subsets(A.n) if s}


def cauchy_bound(poly: Poly) -> Fraction:
    """``1 + max |c_i|`` over the non-leading coefficients of a monic polynomial."""
    coeffs = poly.univariate_coefficients(SHIFT_SYMBOL)
    if coeffs[-1] != 1:
        raise ValueError(f"{poly} is not monic")
    return 1 + max((abs(c) for c in coeffs[:-1]), default=Fraction(0))


def _horner(coeffs, t):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


@dataclass
class ShiftReport:
    t: int
    minors: list
    polynomials: dict = field(default_factory=dict)
    bound: Fraction = Fraction(0)

    def __post_init__(self):
        if any(v <= 0 for s, v in self.minors if s):
            raise ValueError("shift report with a non-positive minor")


def find_positive_shift(A: SkewMatrix) -> ShiftReport:
    """Smallest integer ``t >= 0`` with every nonempty pfaffian minor of ``A + tZ`` positive."""
    polys = shift_polynomials(A)
    coeffs = {s: p.univariate_coefficients(SHIFT_SYMBOL) for s, p in polys.items()}
    bound = max((cauchy_bound(p) for p in polys.values()), default=Fraction(1))
    for t in range(0, math.ceil(bound) + 1):
        if all(_horner(c, t) > 0 for c in coeffs.values()):
            break
    else:  # pragma: no cover - excluded by the root bound
        raise AssertionError("root bound violated")
    minors = all_pfaffian_minors(shifted(A, t))
    return ShiftReport(t, minors, polys, bound)


def shift_preserves_class(A: SkewMatrix, t: int) -> bool:
    """Integer shifts leave the cocycle class, hence the algebra, unchanged."""
    if int(t) != t:
        raise ValueError("only integer shifts preserve the cohomology class")
    return cohomology_invariant(A) == cohomology_invariant(shifted(A, t))
