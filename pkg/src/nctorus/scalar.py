"""Scalar tower: exact rationals, floats, and polynomials over the rationals.

Rationals are plain :class:`fractions.Fraction` (ints are accepted and treated as
rationals), floats are Python floats, and polynomials are :class:`Poly`.  Entries of
one matrix always share a backend; the helpers here refuse to mix backends, so an
exact computation can never silently turn into a floating-point one.

Polynomials in distinct indeterminates model "generic" (totally irrational)
parameters: a rational relation between generic values holds iff it holds
identically as polynomials.
"""
from __future__ import annotations

import ast
import math
import re
from fractions import Fraction
from typing import Iterable, Mapping, Union

RATIONAL = "rational"
FLOAT = "float"
POLYNOMIAL = "polynomial"

Monomial = tuple  # sorted tuple of (name, exponent) pairs


class BackendError(TypeError):
    """Raised when scalars from different backends are combined."""


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for name, e in m2:
        exps[name] = exps.get(name, 0) + e
    return tuple(sorted(exps.items()))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def monomial_key(m: Monomial):
    """Graded lexicographic sort key for monomials."""
    expanded = tuple(name for name, e in m for _ in range(e))
    return (_mono_degree(m), expanded)


def _mono_str(m: Monomial) -> str:
    return "*".join(name if e == 1 else f"{name}^{e}" for name, e in m)


class Poly:
    """Immutable sparse polynomial with rational coefficients.

    Terms are stored as ``{monomial: Fraction}`` with zero coefficients dropped, so
    two polynomials are equal iff their term maps are equal.  A polynomial without
    indeterminates compares (and hashes) equal to the corresponding rational.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Union[int, Fraction]] | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            c = _as_rational(c)
            if c:
                clean[tuple(mono)] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def symbol(cls, name: str) -> "Poly":
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise ValueError(f"invalid indeterminate name {name!r}")
        return cls({((name, 1),): 1})

    @classmethod
    def constant(cls, value) -> "Poly":
        return cls({(): value})

    # -- inspection -----------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def sorted_terms(self):
        return sorted(self._terms.items(), key=lambda t: monomial_key(t[0]))

    def symbols(self) -> frozenset:
        return frozenset(name for mono in self._terms for name, _ in mono)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not mono for mono in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self._terms.get((), Fraction(0))

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=-1)

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(tuple(mono), Fraction(0))

    def univariate_coefficients(self, name: str) -> list:
        """Coefficients ``[c0, c1, ...]`` of a polynomial in the single variable ``name``."""
        extra = self.symbols() - {name}
        if extra:
            raise ValueError(f"polynomial also depends on {sorted(extra)}")
        deg = max(self.degree(), 0)
        coeffs = [Fraction(0)] * (deg + 1)
        for mono, c in self._terms.items():
            coeffs[dict(mono).get(name, 0)] = c
        return coeffs

    def subs(self, values: Mapping[str, object]):
        """Substitute values for indeterminates; returns a Poly (or its value if constant).

        Substituted values may be rationals, floats or polynomials, but not a mix
        of floats with anything symbolic left over.
        """
        total = Fraction(0)
        for mono, c in self._terms.items():
            term = c
            for name, e in mono:
                factor = values[name] if name in values else Poly.symbol(name)
                term = term * factor**e
            total = total + term
        if isinstance(total, Poly) and total.is_constant():
            return total.constant_value()
        return total

    def evaluate(self, values: Mapping[str, float]) -> float:
        return float(sum(float(c) * math.prod(float(values[n]) ** e for n, e in mono)
                         for mono, c in self._terms.items()))

    # -- arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Poly.constant(other)
        raise BackendError(f"cannot combine polynomial with {type(other).__name__}")

    def __add__(self, other):
        try:
            other = self._coerce(other)
        except BackendError:
            if isinstance(other, float):
                raise
            return NotImplemented
        terms = dict(self._terms)
        for mono, c in other._terms.items():
            terms[mono] = terms.get(mono, 0) + c
        return Poly(terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            other = self._coerce(other)
        except BackendError:
            if isinstance(other, float):
                raise
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        try:
            other = self._coerce(other)
        except BackendError:
            if isinstance(other, float):
                raise
            return NotImplemented
        terms: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                terms[m] = terms.get(m, 0) + c1 * c2
        return Poly(terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Poly):
            if not other.is_constant():
                raise ValueError("division by a non-constant polynomial is not supported")
            other = other.constant_value()
        if isinstance(other, float):
            raise BackendError("cannot combine polynomial with float")
        other = _as_rational(other)
        if other == 0:
            raise ZeroDivisionError("polynomial division by zero")
        return Poly({m: c / other for m, c in self._terms.items()})

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Poly.constant(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    # -- comparison -----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Poly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            if self.is_constant():
                self._hash = hash(self.constant_value())
            else:
                self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def __repr__(self):
        return f"Poly({str(self)!r})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono, c in self.sorted_terms():
            mag = abs(c)
            body = _mono_str(mono)
            if not body:
                text = str(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{mag}*{body}"
            if not parts:
                parts.append(text if c > 0 else f"-{text}")
            else:
                parts.append(("+ " if c > 0 else "- ") + text)
        return " ".join(parts)


def _as_rational(x) -> Fraction:
    if isinstance(x, bool):
        raise BackendError("booleans are not scalars")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise BackendError(f"expected an exact rational, got {type(x).__name__}")


# ---------------------------------------------------------------------------
# backend-checked operations

def backend(x) -> str:
    """Backend tag of a scalar value."""
    if isinstance(x, Poly):
        return POLYNOMIAL
    if isinstance(x, bool):
        raise BackendError("booleans are not scalars")
    if isinstance(x, (int, Fraction)):
        return RATIONAL
    if isinstance(x, float):
        return FLOAT
    raise BackendError(f"unsupported scalar type {type(x).__name__}")


def common_backend(values: Iterable) -> str:
    """The single backend shared by ``values``; rationals lift into polynomials."""
    # plain ints are literals usable in any backend
    tags = {backend(v) for v in values if not isinstance(v, int) or isinstance(v, bool)}
    if not tags:
        return RATIONAL
    if tags == {RATIONAL, POLYNOMIAL}:
        return POLYNOMIAL
    if len(tags) > 1:
        raise BackendError(f"mixed scalar backends: {sorted(tags)}")
    return tags.pop()


def coerce(x, target: str):
    """Convert ``x`` into ``target`` backend without losing exactness."""
    src = backend(x)
    if isinstance(x, int) and target == FLOAT:
        return float(x)
    if src == target:
        return Fraction(x) if target == RATIONAL else x
    if src == RATIONAL and target == POLYNOMIAL:
        return Poly.constant(x)
    if src == POLYNOMIAL and target == RATIONAL and x.is_constant():
        return x.constant_value()
    raise BackendError(f"cannot convert {src} scalar to {target}")


def _check_pair(a, b) -> str:
    ta, tb = backend(a), backend(b)
    if ta != tb:
        raise BackendError(f"backend mismatch: {ta} vs {tb}")
    return ta


def add(a, b):
    _check_pair(a, b)
    return a + b


def sub(a, b):
    _check_pair(a, b)
    return a - b


def mul(a, b):
    _check_pair(a, b)
    return a * b


def div(a, b):
    tag = _check_pair(a, b)
    if tag != FLOAT and b == 0:
        raise ZeroDivisionError("division by exact zero")
    if tag == RATIONAL:
        return Fraction(a) / Fraction(b)
    return a / b


def neg(a):
    backend(a)
    return -a


def sign(a) -> int:
    """Sign of an exact (or float) scalar; undefined for non-constant polynomials."""
    if isinstance(a, Poly):
        if not a.is_constant():
            raise ValueError(f"sign of non-constant polynomial {a} is undefined")
        a = a.constant_value()
    backend(a)
    return (a > 0) - (a < 0)


def to_float(a) -> float:
    """Explicit conversion to float (the only sanctioned route out of exactness)."""
    if isinstance(a, Poly):
        return float(a.constant_value())
    backend(a)
    return float(a)


def to_poly(a) -> Poly:
    return coerce(a, POLYNOMIAL)


# ---------------------------------------------------------------------------
# rational linear algebra on coefficient vectors

def rank_over_q(rows: list) -> int:
    """Rank of a matrix of rationals by exact Gaussian elimination."""
    m = [[Fraction(x) for x in row] for row in rows]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        pivot = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if pivot is None:
            col += 1
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pr = m[rank]
        for i in range(rank + 1, len(m)):
            if m[i][col] != 0:
                f = m[i][col] / pr[col]
                m[i] = [x - f * y for x, y in zip(m[i], pr)]
        rank += 1
        col += 1
    return rank


def coefficient_matrix(values: list) -> tuple:
    """Rows of monomial coefficients (columns in graded-lex order) and the column list."""
    polys = [to_poly(v) for v in values]
    monos = sorted({m for p in polys for m in p.terms}, key=monomial_key)
    return [[p.coefficient(m) for m in monos] for p in polys], monos


def rational_independence_rank(values: list) -> int:
    """Rank over Q of the span of exact scalars (rationals or polynomials).

    With generic indeterminates this is the number of Q-linearly independent
    values, i.e. the rank of the group they generate when that group is free.
    """
    tags = {backend(v) for v in values}
    if FLOAT in tags:
        raise BackendError("rational independence is only defined for exact backends")
    if not values:
        return 0
    rows, _ = coefficient_matrix(values)
    return rank_over_q(rows)


# ---------------------------------------------------------------------------
# literal parsing

_FLOAT_LITERAL = re.compile(r"[-+]?(\d+\.\d*|\.\d+|\d+)([eE][-+]?\d+)?")


class ScalarSyntaxError(ValueError):
    pass


def parse_scalar(text: str, symbols: Iterable[str] = ()):
    """Parse a scalar literal.

    ``-?\\d+(/\\d+)?`` gives a rational; plain decimal literals (``0.25``, ``1e-3``)
    give floats; expressions over the declared ``symbols`` built from ``+ - *``,
    ``^`` and rational coefficients give polynomials (rational if constant).
    """
    symbols = set(symbols)
    src = text.strip()
    if not src:
        raise ScalarSyntaxError("empty scalar literal")
    if re.fullmatch(r"-?\d+(/\d+)?", src):
        if re.search(r"/0+$", src):
            raise ScalarSyntaxError(f"division by zero in {text!r}")
        return Fraction(src)
    if re.fullmatch(_FLOAT_LITERAL, src) and re.search(r"[.eE]", src):
        return float(src)
    try:
        tree = ast.parse(src.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ScalarSyntaxError(f"cannot parse scalar {text!r}") from exc
    value = _eval_node(tree.body, symbols, text)
    if isinstance(value, Poly) and value.is_constant():
        return value.constant_value()
    return value


def _eval_node(node, symbols, text):
    if isinstance(node, ast.Constant) and isinstance(node.value, int) \
            and not isinstance(node.value, bool):
        return Fraction(node.value)
    if isinstance(node, ast.Name):
        if node.id not in symbols:
            raise ScalarSyntaxError(f"undeclared symbol {node.id!r} in {text!r}")
        return Poly.symbol(node.id)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand, symbols, text)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        left = _eval_node(node.left, symbols, text)
        if isinstance(node.op, ast.Pow):
            if not (isinstance(node.right, ast.Constant) and isinstance(node.right.value, int)):
                raise ScalarSyntaxError(f"exponent must be a non-negative integer in {text!r}")
            return to_poly(left) ** node.right.value
        right = _eval_node(node.right, symbols, text)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            if isinstance(right, Poly):
                if not right.is_constant():
                    raise ScalarSyntaxError(f"division by a polynomial in {text!r}")
                right = right.constant_value()
            if right == 0:
                raise ScalarSyntaxError(f"division by zero in {text!r}")
            return left / right
    raise ScalarSyntaxError(f"unsupported syntax in scalar {text!r}")


def format_scalar(x) -> str:
    """Inverse of :func:`parse_scalar` (floats use ``repr`` for round-tripping)."""
    if isinstance(x, float):
        text = repr(x)
        return text if re.search(r"[.eE]", text) else text + ".0"
    if isinstance(x, (int, Fraction)):
        return str(Fraction(x))
    return str(x)
