"""Skew-symmetric matrices, determinants, pfaffians and pfaffian minors.

Index conventions: element access ``A[i, j]`` is 0-based like numpy, while index
*subsets* (pfaffian minors, permutations) are 1-based tuples such as ``(1, 3)``,
matching the usual labels theta_13, E_1234, ...

Two canonical symplectic forms appear: the block-diagonal ``J0`` built from
``[[0, 1], [-1, 0]]`` blocks (pfaffian normalized to 1) and the standard form
``[[0, I_p], [-I_p, 0]]``.  They are related by the perfect shuffle, and
``pf(standard) = (-1)**(p*(p-1)//2)``.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .scalar import (FLOAT, POLYNOMIAL, RATIONAL, BackendError, Poly, coerce,
                     common_backend, format_scalar, parse_scalar)


class SkewMatrixError(ValueError):
    """Construction invariant violated (not skew, bad block split, ...)."""


def _zero(tag):
    return {RATIONAL: Fraction(0), FLOAT: 0.0, POLYNOMIAL: Poly()}[tag]


def _one(tag):
    return {RATIONAL: Fraction(1), FLOAT: 1.0, POLYNOMIAL: Poly.constant(1)}[tag]


class SkewMatrix:
    """Immutable n x n skew-symmetric matrix over one scalar backend.

    An optional block split ``(p, q)`` with ``n = 2p + q`` marks the leading
    ``2p x 2p`` block used by the continuous-field construction.
    """

    __slots__ = ("_rows", "n", "backend", "p", "q")

    def __init__(self, rows: Sequence[Sequence], p: int | None = None, q: int | None = None):
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise SkewMatrixError("matrix must be square")
        flat = [x for r in rows for x in r]
        try:
            tag = common_backend(flat)
        except BackendError as exc:
            raise SkewMatrixError(str(exc)) from exc
        data = tuple(tuple(coerce(x, tag) for x in r) for r in rows)
        for i in range(n):
            if data[i][i] != 0:
                raise SkewMatrixError(f"diagonal entry ({i + 1},{i + 1}) is {data[i][i]}, not 0")
            for j in range(i + 1, n):
                if data[j][i] != -data[i][j]:
                    raise SkewMatrixError(
                        f"entries ({i + 1},{j + 1}) and ({j + 1},{i + 1}) are not negatives")
        if (p is None) != (q is None):
            if p is None:
                p = (n - q) // 2 if q is not None and (n - q) % 2 == 0 else None
            else:
                q = n - 2 * p
        if p is not None:
            if p < 0 or q < 0 or 2 * p + q != n:
                raise SkewMatrixError(f"block split p={p}, q={q} does not satisfy n = 2p + q")
        self._rows = data
        self.n = n
        self.backend = tag if n else RATIONAL
        self.p = p
        self.q = q

    # -- constructors ---------------------------------------------------------
    @classmethod
    def from_upper(cls, n: int, upper: Sequence, p=None, q=None) -> "SkewMatrix":
        """Build from the strict upper triangle in row-major order."""
        if len(upper) != n * (n - 1) // 2:
            raise SkewMatrixError(
                f"expected {n * (n - 1) // 2} upper-triangular entries for n={n}, got {len(upper)}")
        tag = common_backend(upper) if upper else RATIONAL
        rows = [[_zero(tag)] * n for _ in range(n)]
        it = iter(upper)
        for i in range(n):
            for j in range(i + 1, n):
                v = coerce(next(it), tag)
                rows[i][j] = v
                rows[j][i] = -v
        return cls(rows, p, q)

    @classmethod
    def from_numpy(cls, arr, p=None, q=None, atol: float = 1e-12) -> "SkewMatrix":
        """Float matrix from an array that is skew up to ``atol`` (antisymmetrized)."""
        a = np.asarray(arr, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise SkewMatrixError("matrix must be square")
        if np.max(np.abs(a + a.T), initial=0.0) > atol:
            raise SkewMatrixError("array is not skew-symmetric within tolerance")
        a = (a - a.T) / 2
        return cls([[float(x) for x in row] for row in a], p, q)

    @classmethod
    def symbolic(cls, n: int, prefix: str = "t", p=None, q=None) -> "SkewMatrix":
        """Generic matrix whose (i, j) entry is the indeterminate ``t{i}{j}``."""
        sep = "_" if n > 9 else ""
        upper = [Poly.symbol(f"{prefix}{i}{sep}{j}")
                 for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        return cls.from_upper(n, upper, p, q)

    @classmethod
    def zeros(cls, n: int, backend: str = RATIONAL) -> "SkewMatrix":
        return cls([[_zero(backend)] * n for _ in range(n)])

    # -- access ---------------------------------------------------------------
    def __getitem__(self, ij):
        i, j = ij
        return self._rows[i][j]

    @property
    def rows(self) -> tuple:
        return self._rows

    def upper(self) -> list:
        return [self._rows[i][j] for i in range(self.n) for j in range(i + 1, self.n)]

    def to_numpy(self) -> np.ndarray:
        if self.backend == POLYNOMIAL:
            raise BackendError("symbolic matrix has no numeric array form")
        return np.array([[float(x) for x in r] for r in self._rows], dtype=float).reshape(self.n, self.n)

    def to_float(self) -> "SkewMatrix":
        return SkewMatrix.from_numpy(self.to_numpy(), self.p, self.q)

    def symbols(self) -> frozenset:
        if self.backend != POLYNOMIAL:
            return frozenset()
        return frozenset().union(*(x.symbols() for x in self.upper())) if self.n > 1 else frozenset()

    def with_split(self, p: int, q: int | None = None) -> "SkewMatrix":
        return SkewMatrix(self._rows, p, self.n - 2 * p if q is None else q)

    def block(self, name: str) -> list:
        """One of the blocks ``'11', '12', '21', '22'`` of the (2p, q) split, as rows."""
        if self.p is None:
            raise SkewMatrixError("matrix has no block split")
        k = 2 * self.p
        rs, cs = {"11": (slice(0, k), slice(0, k)), "12": (slice(0, k), slice(k, None)),
                  "21": (slice(k, None), slice(0, k)), "22": (slice(k, None), slice(k, None))}[name]
        return [list(r[cs]) for r in self._rows[rs]]

    def leading_block(self) -> "SkewMatrix":
        return SkewMatrix(self.block("11"))

    def submatrix(self, indices: Sequence[int]) -> "SkewMatrix":
        """Principal submatrix on 1-based ``indices`` (in the given order)."""
        idx = [i - 1 for i in indices]
        return SkewMatrix([[self._rows[i][j] for j in idx] for i in idx])

    def map(self, fn) -> "SkewMatrix":
        return SkewMatrix([[fn(x) for x in r] for r in self._rows], self.p, self.q)

    # -- arithmetic -----------------------------------------------------------
    def __add__(self, other: "SkewMatrix") -> "SkewMatrix":
        if not isinstance(other, SkewMatrix) or other.n != self.n:
            return NotImplemented
        return SkewMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)],
                          self.p, self.q)

    def __sub__(self, other: "SkewMatrix") -> "SkewMatrix":
        return self + (-other)

    def __neg__(self) -> "SkewMatrix":
        return self.map(lambda x: -x)

    def scaled(self, c) -> "SkewMatrix":
        return self.map(lambda x: x * c)

    def __eq__(self, other):
        if not isinstance(other, SkewMatrix):
            return NotImplemented
        return self._rows == other._rows and (self.p, self.q) == (other.p, other.q)

    def __hash__(self):
        return hash((self._rows, self.p, self.q))

    def __repr__(self):
        split = f", p={self.p}, q={self.q}" if self.p is not None else ""
        body = ", ".join("[" + ", ".join(format_scalar(x) for x in r) + "]" for r in self._rows)
        return f"SkewMatrix([{body}]{split})"

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "q": self.q,
                "symbols": sorted(self.symbols()),
                "upper": [format_scalar(x) for x in self.upper()]}

    @classmethod
    def from_dict(cls, data: dict) -> "SkewMatrix":
        """Parse the JSON matrix-file payload (see README for the format)."""
        if not isinstance(data, dict):
            raise SkewMatrixError("matrix file must contain a JSON object")
        if "n" not in data:
            raise SkewMatrixError("matrix file: missing field 'n'")
        if ("upper" in data) == ("rows" in data):
            raise SkewMatrixError("matrix file: give exactly one of 'upper' or 'rows'")
        n = data["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise SkewMatrixError("matrix file: field 'n' must be a non-negative integer")
        symbols = data.get("symbols") or []
        key = "upper" if "upper" in data else "rows"
        entries = data[key]
        if not isinstance(entries, list):
            raise SkewMatrixError(f"matrix file: field {key!r} must be a list")
        if key == "rows":
            if len(entries) != n or not all(isinstance(r, list) and len(r) == n for r in entries):
                raise SkewMatrixError(f"matrix file: 'rows' must be {n} lists of length {n}")
            cells = [(f"rows[{i}][{j}]", x) for i, r in enumerate(entries) for j, x in enumerate(r)]
        else:
            cells = [(f"upper[{k}]", x) for k, x in enumerate(entries)]
        values = []
        for where, text in cells:
            if isinstance(text, (int, float)) and not isinstance(text, bool):
                text = str(text)
            if not isinstance(text, str):
                raise SkewMatrixError(f"matrix file: {where} must be a string or number")
            try:
                values.append(parse_scalar(text, symbols))
            except ValueError as exc:
                raise SkewMatrixError(f"matrix file: {where}: {exc}") from exc
        if symbols:
            values = [coerce(v, POLYNOMIAL) for v in values]
        elif any(isinstance(v, float) for v in values):  # integer literals join a float file
            values = [float(v) if isinstance(v, Fraction) and v.denominator == 1 else v for v in values]
        try:
            common_backend(values)
        except BackendError as exc:
            raise SkewMatrixError(f"matrix file: {exc}") from exc
        if key == "rows":
            return cls([values[i * n:(i + 1) * n] for i in range(n)], data.get("p"), data.get("q"))
        return cls.from_upper(n, values, data.get("p"), data.get("q"))


# ---------------------------------------------------------------------------
# canonical forms and congruences

def j0_blockdiag(p: int) -> SkewMatrix:
    """Block-diagonal ``J0`` with ``p`` blocks ``[[0, 1], [-1, 0]]``; its pfaffian is 1."""
    n = 2 * p
    rows = [[Fraction(0)] * n for _ in range(n)]
    for k in range(p):
        rows[2 * k][2 * k + 1] = Fraction(1)
        rows[2 * k + 1][2 * k] = Fraction(-1)
    return SkewMatrix(rows)


def j0_standard(p: int) -> SkewMatrix:
    """Standard symplectic form ``[[0, I_p], [-I_p, 0]]``."""
    n = 2 * p
    rows = [[Fraction(0)] * n for _ in range(n)]
    for k in range(p):
        rows[k][p + k] = Fraction(1)
        rows[p + k][k] = Fraction(-1)
    return SkewMatrix(rows)


def shuffle_permutation(p: int) -> tuple:
    """Perfect shuffle taking :func:`j0_blockdiag` to :func:`j0_standard` by congruence."""
    return tuple(range(1, 2 * p, 2)) + tuple(range(2, 2 * p + 1, 2))


def standard_form_sign(p: int) -> int:
    """``pf(j0_standard(p))``, i.e. the sign relating the two conventions."""
    return -1 if (p * (p - 1) // 2) % 2 else 1


def permutation_sign(perm: Sequence[int]) -> int:
    inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
    return -1 if inversions % 2 else 1


def _check_signed_permutation(n, perm, signs):
    if sorted(perm) != list(range(1, n + 1)):
        raise ValueError(f"{tuple(perm)} is not a permutation of 1..{n}")
    if signs is None:
        return (1,) * n
    if len(signs) != n or any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be a vector of +1/-1 of length n")
    return tuple(signs)


def signed_permutation_matrix(perm: Sequence[int], signs: Sequence[int] | None = None) -> list:
    """Matrix ``P`` with ``P[perm[k]-1][k] = signs[k]``."""
    n = len(perm)
    signs = _check_signed_permutation(n, perm, signs)
    P = [[0] * n for _ in range(n)]
    for k, (i, s) in enumerate(zip(perm, signs)):
        P[i - 1][k] = s
    return P


def signed_permutation_det(perm: Sequence[int], signs: Sequence[int] | None = None) -> int:
    signs = _check_signed_permutation(len(perm), perm, signs)
    prod = 1
    for s in signs:
        prod *= s
    return permutation_sign(perm) * prod


def signed_permutation_congruence(A: SkewMatrix, perm: Sequence[int],
                                  signs: Sequence[int] | None = None) -> SkewMatrix:
    """``P^T A P`` for the signed permutation ``P``.

    New generator ``k`` is old generator ``perm[k]`` (1-based) times ``signs[k]``,
    so ``B[k, l] = signs[k] * signs[l] * A[perm[k], perm[l]]``.
    """
    signs = _check_signed_permutation(A.n, perm, signs)
    rows = [[A[perm[k] - 1, perm[l] - 1] if signs[k] * signs[l] == 1
             else -A[perm[k] - 1, perm[l] - 1] for l in range(A.n)] for k in range(A.n)]
    return SkewMatrix(rows)


def signed_permutations(n: int):
    """All ``(perm, signs)`` pairs in lexicographic order (``+1`` before ``-1``)."""
    for perm in itertools.permutations(range(1, n + 1)):
        for signs in itertools.product((1, -1), repeat=n):
            yield perm, signs


def find_signed_permutation(A: SkewMatrix, target: SkewMatrix) -> list:
    """Every signed permutation carrying ``A`` to ``target`` (brute force)."""
    return [(perm, signs) for perm, signs in signed_permutations(A.n)
            if signed_permutation_congruence(A, perm, signs) == target]


def congruence(A: SkewMatrix, B: Sequence[Sequence]) -> SkewMatrix:
    """``B^T A B`` for a general square matrix ``B`` over ``A``'s backend."""
    n = A.n
    Bc = [[coerce(x, A.backend) if A.backend != FLOAT else float(x) for x in row] for row in B]
    AB = [[sum((A[i, k] * Bc[k][j] for k in range(n)), _zero(A.backend)) for j in range(n)]
          for i in range(n)]
    rows = [[sum((Bc[k][i] * AB[k][j] for k in range(n)), _zero(A.backend)) for j in range(n)]
            for i in range(n)]
    if A.backend == FLOAT:
        arr = np.array(rows, dtype=float)
        return SkewMatrix.from_numpy(arr, atol=1e-9 * (1 + np.abs(arr).max(initial=0)))
    return SkewMatrix(rows)


# ---------------------------------------------------------------------------
# pfaffians and determinants

def _pfaffian_expansion(rows, idx: tuple, tag, cache: dict):
    """First-row expansion ``pf = sum_j (-1)^j a_1j pf(A without 1, j)``, memoized."""
    if not idx:
        return _one(tag)
    if len(idx) % 2:
        return _zero(tag)
    hit = cache.get(idx)
    if hit is not None:
        return hit
    first, rest = idx[0], idx[1:]
    total = _zero(tag)
    for pos, j in enumerate(rest):
        a = rows[first][j]
        if a == 0:
            continue
        term = a * _pfaffian_expansion(rows, rest[:pos] + rest[pos + 1:], tag, cache)
        total = total + term if pos % 2 == 0 else total - term
    cache[idx] = total
    return total


def _pfaffian_float(a: np.ndarray) -> float:
    """Parlett-Reid skew tridiagonalization with partial pivoting, O(n^3)."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if n % 2:
        return 0.0
    pf = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            pf = -pf
        if a[k + 1, k] == 0.0:
            return 0.0
        pf *= a[k, k + 1]
        if k + 2 < n:
            tau = a[k, k + 2:] / a[k, k + 1]
            col = a[k + 2:, k + 1].copy()
            a[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return float(pf)


def pfaffian(A: SkewMatrix):
    """Pfaffian, normalized by ``pf(j0_blockdiag(p)) = 1``; 0 for odd n, 1 for n = 0."""
    if A.n % 2:
        return _zero(A.backend)
    if A.backend == FLOAT:
        return _pfaffian_float(A.to_numpy()) if A.n else 1.0
    return _pfaffian_expansion(A.rows, tuple(range(A.n)), A.backend, {})


def _det_bareiss(m: list):
    n = len(m)
    if n == 0:
        return Fraction(1)
    m = [list(r) for r in m]
    sign, prev = 1, Fraction(1)
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def _det_laplace(m: list, tag):
    n = len(m)
    cache: dict = {}

    def minor(cols: tuple):
        if not cols:
            return _one(tag)
        if cols in cache:
            return cache[cols]
        r = n - len(cols)
        total = _zero(tag)
        for pos, c in enumerate(cols):
            if m[r][c] == 0:
                continue
            term = m[r][c] * minor(cols[:pos] + cols[pos + 1:])
            total = total + term if pos % 2 == 0 else total - term
        cache[cols] = total
        return total

    return minor(tuple(range(n)))


def determinant(A):
    """Determinant of a :class:`SkewMatrix` or of any square matrix given as rows.

    Fraction-free Bareiss elimination for rationals, memoized cofactor expansion for
    polynomials (division-free), LU for floats.
    """
    rows = A.rows if isinstance(A, SkewMatrix) else [list(r) for r in A]
    flat = [x for r in rows for x in r]
    tag = common_backend(flat) if flat else RATIONAL
    rows = [[coerce(x, tag) for x in r] for r in rows]
    if tag == FLOAT:
        return float(np.linalg.det(np.array(rows, dtype=float))) if rows else 1.0
    if tag == RATIONAL:
        return _det_bareiss(rows)
    return _det_laplace(rows, tag)


def _check_subset(indices: Sequence[int], n: int) -> tuple:
    idx = tuple(indices)
    if len(idx) % 2:
        raise ValueError(f"pfaffian minor needs an even number of indices, got {idx}")
    if any(not 1 <= i <= n for i in idx):
        raise ValueError(f"indices {idx} out of range 1..{n}")
    if any(a >= b for a, b in zip(idx, idx[1:])):
        raise ValueError(f"indices {idx} must be strictly increasing")
    return idx


def pfaffian_minor(A: SkewMatrix, indices: Sequence[int]):
    """Pfaffian of the principal submatrix on the 1-based, increasing ``indices``."""
    idx = _check_subset(indices, A.n)
    if A.backend == FLOAT:
        return pfaffian(A.submatrix(idx)) if idx else 1.0
    return _pfaffian_expansion(A.rows, tuple(i - 1 for i in idx), A.backend, {})


def even_subsets(n: int) -> list:
    """Even-size subsets of 1..n (empty set included), graded-lexicographic order."""
    return [c for size in range(0, n + 1, 2) for c in itertools.combinations(range(1, n + 1), size)]


def all_pfaffian_minors(A: SkewMatrix) -> list:
    """``[(subset, minor), ...]`` over all ``2**(n-1)`` even subsets (``() -> 1``)."""
    if A.backend == FLOAT:
        return [(s, pfaffian_minor(A, s)) for s in even_subsets(A.n)]
    cache: dict = {}
    return [(s, _pfaffian_expansion(A.rows, tuple(i - 1 for i in s), A.backend, cache))
            for s in even_subsets(A.n)]


def load_matrix(path) -> SkewMatrix:
    import json
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SkewMatrixError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return SkewMatrix.from_dict(data)


def dump_matrix(A: SkewMatrix, path) -> None:
    import json
    with open(path, "w") as fh:
        json.dump(A.to_dict(), fh, indent=2)
        fh.write("\n")


def matrix_from_rows(rows: Iterable[Iterable], p=None, q=None) -> SkewMatrix:
    """Convenience constructor accepting ints/strings for quick interactive use."""
    return SkewMatrix([[parse_scalar(x) if isinstance(x, str) else x for x in r] for r in rows], p, q)
