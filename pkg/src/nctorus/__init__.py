"""Projective modules over noncommutative tori: pfaffians, trace ranges and Heisenberg bimodules."""
from .skewmat import SkewMatrix, SkewMatrixError, pfaffian, pfaffian_minor, determinant, even_subsets
from .elliott import elliott_generator, trace_lattice, basis_certificate
from .normalize import find_positive_shift
from .ktheory import k0_rank, generator_catalog, basis_report

__version__ = "0.1.0"

__all__ = [
    "SkewMatrix", "SkewMatrixError", "pfaffian", "pfaffian_minor", "determinant", "even_subsets",
    "elliott_generator", "trace_lattice", "basis_certificate", "find_positive_shift",
    "k0_rank", "generator_catalog", "basis_report",
]
