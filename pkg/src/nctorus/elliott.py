"""Elliott's description of the trace range on K_0 of a noncommutative torus.

The range is the subgroup of R generated by one number per even index subset
``j_1 < ... < j_2m``: a signed sum over the perfect matchings of the subset.
That sum is computed here literally, by enumerating matchings, and is kept
independent of the pfaffian recursion in :mod:`nctorus.skewmat` so the two can
check each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .scalar import POLYNOMIAL, RATIONAL, BackendError, Poly, coefficient_matrix, rank_over_q
from .skewmat import SkewMatrix, _zero, _one, even_subsets, permutation_sign


def perfect_matchings(items: Sequence[int]) -> Iterator[tuple]:
    """Perfect matchings of ``items`` in canonical order.

    The smallest unmatched element is always paired first, so each matching comes
    out as ``((a1, b1), (a2, b2), ...)`` with ``a_s < b_s`` and ``a1 < a2 < ...``;
    these are exactly the permutations allowed in the signed sum.
    """
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for k, partner in enumerate(rest):
        for tail in perfect_matchings(rest[:k] + rest[k + 1:]):
            yield ((first, partner),) + tail


def matching_sign(matching: Sequence[tuple]) -> int:
    """Sign of the permutation spelled by the flattened matching word."""
    return permutation_sign([i for pair in matching for i in pair])


def double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def elliott_terms(theta: SkewMatrix, subset: Sequence[int]) -> list:
    """``[(sign, matching), ...]`` summed by :func:`elliott_generator`."""
    idx = tuple(subset)
    if len(idx) % 2:
        raise ValueError(f"subset {idx} has odd size")
    if any(a >= b for a, b in zip(idx, idx[1:])) or any(not 1 <= i <= theta.n for i in idx):
        raise ValueError(f"subset {idx} must be strictly increasing within 1..{theta.n}")
    return [(matching_sign(m), m) for m in perfect_matchings(idx)]


def elliott_generator(theta: SkewMatrix, subset: Sequence[int]):
    """Signed matching sum of ``theta`` over ``subset`` (1-based); the empty subset gives 1."""
    terms = elliott_terms(theta, subset)
    if not subset:
        return _one(theta.backend)
    total = _zero(theta.backend)
    for sign, matching in terms:
        prod = _one(theta.backend)
        for a, b in matching:
            prod = prod * theta[a - 1, b - 1]
        total = total + prod if sign > 0 else total - prod
    return total


@dataclass(frozen=True)
class TraceLattice:
    """Generators of the trace range, indexed by even subsets in graded-lex order."""

    n: int
    generators: tuple
    backend: str

    def __post_init__(self):
        if len(self.generators) != 2 ** max(self.n - 1, 0) and self.n > 0:
            raise ValueError("trace lattice must have 2^(n-1) generators")
        if self.generators and (self.generators[0][0] != () or self.generators[0][1] != 1):
            raise ValueError("the empty subset must come first with generator 1")

    def values(self) -> list:
        return [v for _, v in self.generators]

    def as_dict(self) -> dict:
        return dict(self.generators)


def trace_lattice(theta: SkewMatrix) -> TraceLattice:
    gens = tuple((s, elliott_generator(theta, s)) for s in even_subsets(theta.n))
    return TraceLattice(theta.n, gens, theta.backend)


def rational_lattice_reduce(lattice: TraceLattice) -> Fraction:
    """Positive generator ``g/d`` of the subgroup of Q spanned by rational generators."""
    if lattice.backend != RATIONAL:
        raise BackendError("lattice reduction needs rational generators")
    values = [Fraction(v) for v in lattice.values()]
    d = math.lcm(*(v.denominator for v in values))
    g = math.gcd(*(int(v * d) for v in values))
    return Fraction(g, d)


@dataclass
class BasisCertificate:
    """Outcome of the generic-parameter basis check."""

    n: int
    rank: int
    expected_rank: int
    witness: tuple | None = None
    mismatches: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.rank == self.expected_rank and not self.mismatches


def _first_dependent(values: list, subsets: list):
    rows, _ = coefficient_matrix(values)
    for k in range(1, len(rows) + 1):
        if rank_over_q(rows[:k]) < k:
            return subsets[k - 1]
    return None


def basis_certificate(theta: SkewMatrix, traces: Mapping[tuple, object] | None = None) -> BasisCertificate:
    """Check that the trace generators of a symbolic ``theta`` are Q-independent.

    With distinct indeterminates as entries this models a totally irrational
    parameter, where the trace is injective on K_0: full rank 2^(n-1) means the
    generators (and any modules with those traces) form a basis.  If ``traces``
    maps subsets to module traces, each must equal its generator exactly.
    On failure the witness is the first subset whose generator depends on the
    earlier ones.
    """
    if theta.backend != POLYNOMIAL:
        raise BackendError("basis certificate requires a symbolic (polynomial) matrix")
    lattice = trace_lattice(theta)
    subsets = [s for s, _ in lattice.generators]
    values = lattice.values()
    rows, _ = coefficient_matrix(values)
    rank = rank_over_q(rows)
    cert = BasisCertificate(theta.n, rank, len(values))
    if rank < len(values):
        cert.witness = _first_dependent(values, subsets)
    if traces is not None:
        expected = lattice.as_dict()
        for s in subsets:
            got = traces.get(s)
            if got is None or Poly.constant(0) + got != expected[s]:
                cert.mismatches.append(s)
    return cert
