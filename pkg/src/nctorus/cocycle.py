"""Phase-valued 2-cocycles on Z^n and on the field groupoid Z^n x [0, 1].

A cocycle is stored by its phase in R/Z: the unitary value is ``e(phase)`` with
``e(x) = exp(2 pi i x)``.  For rational parameters every phase is an exact
:class:`~fractions.Fraction` reduced mod 1, so the cocycle identity can be checked
exactly.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .scalar import FLOAT, POLYNOMIAL, RATIONAL, BackendError
from .skewmat import SkewMatrix


def _mod1(x):
    return x % 1


def _circle_distance(a, b) -> float:
    d = float((a - b) % 1)
    return min(d, 1.0 - d)


def cocycle_phase(theta: SkewMatrix, x: Sequence[int], y: Sequence[int]):
    """Phase ``(x . theta y) / 2 mod 1`` of the cocycle ``omega_theta(x, y)``."""
    if theta.backend == POLYNOMIAL:
        raise BackendError("phases need numeric (rational or float) parameters")
    n = theta.n
    if len(x) != n or len(y) != n:
        raise ValueError(f"expected vectors of length {n}")
    acc = Fraction(0) if theta.backend == RATIONAL else 0.0
    for i in range(n):
        if x[i]:
            for j in range(n):
                if y[j] and i != j:
                    acc += x[i] * theta[i, j] * y[j]
    return _mod1(acc / 2)


@dataclass(frozen=True)
class PhaseCocycle:
    """A function ``Z^n x Z^n -> R/Z`` claimed to be a normalized 2-cocycle."""

    n: int
    phase: Callable
    exact: bool = True
    matrix: SkewMatrix | None = None

    def __call__(self, x, y):
        return self.phase(tuple(x), tuple(y))

    @classmethod
    def from_matrix(cls, theta: SkewMatrix) -> "PhaseCocycle":
        return cls(theta.n, lambda x, y: cocycle_phase(theta, x, y),
                   exact=theta.backend == RATIONAL, matrix=theta)


def field_cocycle(path, r: float) -> PhaseCocycle:
    """Fiber at ``r`` of the field cocycle: ``omega_{gamma(r)}`` on Z^n.

    Pairs from different fibers are not composable in the transformation groupoid,
    so they are simply outside the domain.
    """
    return PhaseCocycle.from_matrix(path.gamma(r))


@dataclass
class CocycleCheck:
    passed: bool
    checked: int
    witness: tuple | None = None
    defect: float = 0.0


def _add(x, y):
    return tuple(a + b for a, b in zip(x, y))


def random_triples(n: int, count: int, radius: int = 3, seed: int = 0) -> list:
    rng = random.Random(seed)
    vec = lambda: tuple(rng.randint(-radius, radius) for _ in range(n))  # noqa: E731
    return [(vec(), vec(), vec()) for _ in range(count)]


def verify_cocycle(omega: PhaseCocycle, samples, tol: float = 1e-12, seed: int = 0) -> CocycleCheck:
    """Check ``w(x,y) + w(x+y,z) = w(x,y+z) + w(y,z)`` and ``w(x,0) = w(0,x) = 0`` mod 1.

    ``samples`` is a list of triples or a count of random triples.  Exact cocycles
    are compared exactly; float ones within ``tol`` on the circle.
    """
    if isinstance(samples, int):
        samples = random_triples(omega.n, samples, seed=seed)
    zero = (0,) * omega.n
    worst = 0.0
    for k, (x, y, z) in enumerate(samples):
        lhs = omega(x, y) + omega(_add(x, y), z)
        rhs = omega(x, _add(y, z)) + omega(y, z)
        units = (omega(x, zero), omega(zero, x))
        if omega.exact:
            bad = (lhs - rhs) % 1 != 0 or any(u % 1 != 0 for u in units)
            defect = 0.0 if not bad else max(_circle_distance(lhs, rhs), *(_circle_distance(u, 0) for u in units))
        else:
            defect = max(_circle_distance(lhs, rhs), *(_circle_distance(u, 0) for u in units))
            bad = defect > tol
        worst = max(worst, defect)
        if bad:
            return CocycleCheck(False, k + 1, (x, y, z), worst)
    return CocycleCheck(True, len(samples), None, worst)


def verify_cocycle_box(theta: SkewMatrix, radius: int = 2) -> CocycleCheck:
    """Exhaustive exact check of the cocycle identity for ``omega_theta`` on a box.

    Every triple with coordinates in ``-radius..radius`` is tested.  Phases are
    scaled to integers mod ``2D`` (``D`` the common denominator) and evaluated
    directly on the summed vectors with integer arithmetic.
    """
    if theta.backend != RATIONAL:
        raise BackendError("exhaustive exact check needs a rational matrix")
    n = theta.n
    denom = math.lcm(*(Fraction(v).denominator for v in theta.upper())) if n > 1 else 1
    big = np.array([[int(theta[i, j] * denom) for j in range(n)] for i in range(n)], dtype=np.int64)
    modulus = 2 * denom
    grid = np.array(np.meshgrid(*[np.arange(-radius, radius + 1)] * n, indexing="ij"),
                    dtype=np.int64).reshape(n, -1).T
    if np.abs(big).max(initial=0) * (3 * radius) ** 2 * n * n > 2**62:
        raise OverflowError("matrix too large for the integer box check")

    def phase(X, Y):  # (x . Theta y) mod 2D for all row pairs
        return np.mod(X @ big @ Y.T, modulus)

    w = phase(grid, grid)
    zero = np.zeros((1, n), dtype=np.int64)
    if np.any(phase(grid, zero)) or np.any(phase(zero, grid)):
        return CocycleCheck(False, 0, "unit normalization")
    for a, x in enumerate(grid):
        xy = grid + x                      # x + y for every y
        lhs = w[a][:, None] + phase(xy, grid)           # w(x,y) + w(x+y,z)
        rhs = phase(x[None, :], (grid[:, None, :] + grid[None, :, :]).reshape(-1, n)).reshape(
            len(grid), len(grid)) + w                    # w(x,y+z) + w(y,z)
        bad = np.mod(lhs - rhs, modulus) != 0
        if bad.any():
            b, c = np.argwhere(bad)[0]
            return CocycleCheck(False, a * len(grid) ** 2, (tuple(x), tuple(grid[b]), tuple(grid[c])))
    return CocycleCheck(True, len(grid) ** 3)


def twist_by_coboundary(omega: PhaseCocycle, f: Callable) -> PhaseCocycle:
    """Cohomologous cocycle ``w'(x,y) = f(x) + f(y) - f(x+y) + w(x,y)`` (phases mod 1)."""
    zero = (0,) * omega.n
    if f(zero) % 1 != 0:
        raise ValueError("coboundary function must vanish at 0")

    def phase(x, y):
        return _mod1(f(x) + f(y) - f(_add(x, y)) + omega(x, y))

    return PhaseCocycle(omega.n, phase, exact=omega.exact)


def cohomology_invariant(theta: SkewMatrix) -> tuple:
    """``(theta_jk mod 1)`` for ``j < k``: the class of ``omega_theta`` in H^2(Z^n, T)."""
    if theta.backend == POLYNOMIAL:
        raise BackendError("cohomology invariant needs numeric entries")
    return tuple(_mod1(v) for v in theta.upper())


def cocycle_invariant(omega: PhaseCocycle) -> tuple:
    """Commutator phases ``w(e_j, e_k) - w(e_k, e_j) mod 1``, ``j < k``.

    The antisymmetrization kills coboundaries, so this is a class invariant of any
    cocycle; for ``omega_theta`` it reproduces :func:`cohomology_invariant`.
    """
    n = omega.n
    basis = [tuple(int(i == j) for i in range(n)) for j in range(n)]
    return tuple(_mod1(omega(basis[j], basis[k]) - omega(basis[k], basis[j]))
                 for j in range(n) for k in range(j + 1, n))


# ---------------------------------------------------------------------------
# dual parameter

def _inverse_exact(m: list) -> list:
    n = len(m)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(m)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


def _matmul(a: list, b: list) -> list:
    if not a or not b:
        return [[Fraction(0)] * (len(b[0]) if b else 0) for _ in a]
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0)) for j in range(len(b[0]))]
            for i in range(len(a))]


def dual_parameter(gamma: SkewMatrix) -> SkewMatrix:
    """Block matrix ``[[g11^-1, -g11^-1 g12], [g21 g11^-1, g22 - g21 g11^-1 g12]]``.

    Needs the (p, q) split and an invertible leading block.
    """
    if gamma.p is None:
        raise ValueError("dual parameter needs a (p, q) block split")
    p, q = gamma.p, gamma.q
    if gamma.backend == FLOAT:
        g = gamma.to_numpy()
        k = 2 * p
        g11, g12, g21, g22 = g[:k, :k], g[:k, k:], g[k:, :k], g[k:, k:]
        if k and abs(np.linalg.det(g11)) < 1e-14 * max(1.0, np.abs(g11).max()) ** k:
            raise ZeroDivisionError("leading block is singular")
        inv = np.linalg.inv(g11) if k else g11
        out = np.block([[inv, -inv @ g12], [g21 @ inv, g22 - g21 @ inv @ g12]])
        return SkewMatrix.from_numpy(out, p, q, atol=1e-8 * (1 + np.abs(out).max(initial=0)))
    if gamma.backend != RATIONAL:
        raise BackendError("dual parameter needs rational or float entries")
    g11, g12, g21, g22 = (gamma.block(b) for b in ("11", "12", "21", "22"))
    inv = _inverse_exact(g11) if p else []
    a12 = [[-x for x in row] for row in _matmul(inv, g12)] if p else []
    a21 = _matmul(g21, inv) if p else [[] for _ in range(q)]
    corr = _matmul(a21, g12) if p else [[Fraction(0)] * q for _ in range(q)]
    a22 = [[g22[i][j] - corr[i][j] for j in range(q)] for i in range(q)]
    rows = [r1 + r2 for r1, r2 in zip(inv, a12)] + [r1 + r2 for r1, r2 in zip(a21, a22)]
    return SkewMatrix(rows, p, q)
