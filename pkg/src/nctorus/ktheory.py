"""Catalog of K_0 generators for the n-dimensional noncommutative torus.

For each even subset ``S`` the module over ``M = R^|S|/2 x Z^(n-|S|)`` lives over a
rotated copy of the parameter whose leading block is the submatrix on ``S``.
Its trace is the pfaffian minor on ``S``; the empty subset is the free module.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .elliott import BasisCertificate, basis_certificate, trace_lattice
from .normalize import find_positive_shift, shifted
from .scalar import FLOAT, POLYNOMIAL, RATIONAL, format_scalar
from .skewmat import (SkewMatrix, even_subsets, pfaffian, pfaffian_minor,
                      signed_permutation_congruence)


def k0_rank(n: int) -> int:
    if n < 1:
        raise ValueError("rank is defined for n >= 1")
    return 2 ** (n - 1)


def subset_label(subset, n: int) -> str:
    if not subset:
        return "trivial"
    sep = "" if n <= 9 else ","
    return "E_" + sep.join(str(i) for i in subset)


@dataclass(frozen=True)
class GeneratorDescriptor:
    subset: tuple
    shape: tuple
    perm: tuple
    signs: tuple
    rotated: SkewMatrix
    expected_trace: object
    label: str
    shift: int = 0

    @property
    def is_trivial(self) -> bool:
        return not self.subset

    def as_dict(self) -> dict:
        return {"subset": list(self.subset), "label": self.label, "shape": list(self.shape),
                "perm": list(self.perm), "signs": list(self.signs), "shift": self.shift,
                "expected_trace": format_scalar(self.expected_trace)}


def _same(a, b, tag) -> bool:
    return abs(a - b) <= 1e-12 * (1 + abs(b)) if tag == FLOAT else a == b


def _rotation(theta: SkewMatrix, subset: tuple):
    """Lexicographically first signed permutation putting ``subset`` in front with leading pf = minor."""
    rest = [i for i in range(1, theta.n + 1) if i not in subset]
    minor = pfaffian_minor(theta, subset)
    k = len(subset)
    for head in itertools.permutations(subset):
        for tail in itertools.permutations(rest):
            perm = head + tail
            for signs in itertools.product((1, -1), repeat=theta.n):
                rot = signed_permutation_congruence(theta, perm, signs)
                if k == 0 or _same(pfaffian(rot.submatrix(range(1, k + 1))), minor, theta.backend):
                    return perm, signs, rot
    raise AssertionError("no rotation found")  # pragma: no cover - identity order always works


def _needs_shift(theta: SkewMatrix) -> bool:
    return theta.backend != POLYNOMIAL and any(
        pfaffian_minor(theta, s) <= 0 for s in even_subsets(theta.n) if s)


def _positive_parameter(theta: SkewMatrix):
    if not _needs_shift(theta):
        return theta, 0
    exact = theta if theta.backend == RATIONAL else theta.map(Fraction)
    t = find_positive_shift(exact).t
    if theta.backend == FLOAT:
        return SkewMatrix.from_numpy(shifted(exact, t).to_numpy()), t
    return shifted(theta, t), t


def generator_catalog(theta: SkewMatrix, n: int | None = None, normalize: bool = True) -> list:
    """One descriptor per even subset, in graded-lex order.

    Numeric parameters with a non-positive minor are first moved by the integer
    shift ``theta + tZ`` (same algebra); descriptors then refer to the shifted matrix.
    """
    if n is not None and n != theta.n:
        raise ValueError(f"matrix is {theta.n}x{theta.n}, not n = {n}")
    param, t = _positive_parameter(theta) if normalize else (theta, 0)
    out = []
    for s in even_subsets(param.n):
        perm, signs, rot = _rotation(param, s)
        p = len(s) // 2
        out.append(GeneratorDescriptor(s, (p, param.n - 2 * p), perm, signs, rot.with_split(p),
                                       pfaffian_minor(param, s), subset_label(s, param.n), t))
    return out


@dataclass
class BasisReport:
    n: int
    catalog: list
    certificate: BasisCertificate
    lattice_match: bool
    text: str = ""
    crosschecks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (self.certificate.passed and self.lattice_match and len(self.catalog) == k0_rank(self.n)
                and all(c.get("pass", True) for c in self.crosschecks.values()))

    def as_dict(self) -> dict:
        cert = self.certificate
        return {"n": self.n, "rank": cert.rank, "expected_rank": cert.expected_rank,
                "generators": [d.as_dict() for d in self.catalog],
                "witness": list(cert.witness) if cert.witness else None,
                "mismatches": [list(s) for s in cert.mismatches],
                "crosschecks": self.crosschecks, "pass": self.passed}


def _certificate_text(n: int, catalog: list, cert: BasisCertificate) -> str:
    lines = [f"K_0 generators for the {n}-dimensional noncommutative torus",
             f"  expected rank 2^{n - 1} = {k0_rank(n)}", ""]
    for d in catalog:
        shape = "free rank-one module" if d.is_trivial else f"S(R^{d.shape[0]} x Z^{d.shape[1]})"
        lines.append(f"  {d.label:<12} {shape:<24} trace {format_scalar(d.expected_trace)}")
    lines.append("")
    lines.append(f"  rank over Q of the traces: {cert.rank}")
    if cert.passed:
        lines += ["  The traces are linearly independent over Q at the generic parameter, where the",
                  "  trace is injective on K_0; these modules therefore form a basis there.",
                  "  The field of algebras over [0, 1] joining that fiber to any other one carries",
                  "  the basis along, so the same modules generate K_0 at every parameter."]
    else:
        if cert.witness:
            lines.append(f"  dependent generator: {subset_label(cert.witness, n)}")
        if cert.mismatches:
            lines.append("  trace mismatches: " + ", ".join(subset_label(s, n) for s in cert.mismatches))
        lines.append("  FAILED")
    return "\n".join(lines)


def basis_report(theta: SkewMatrix | None = None, n: int | None = None) -> BasisReport:
    """Catalog plus basis certificate at a symbolic parameter."""
    if theta is None:
        if n is None:
            raise ValueError("need a symbolic matrix or n")
        theta = SkewMatrix.symbolic(n)
    n = theta.n if n is None else n
    catalog = generator_catalog(theta, n)
    traces = {d.subset: d.expected_trace for d in catalog}
    cert = basis_certificate(theta, traces=traces)
    lattice = trace_lattice(theta).as_dict()
    match = all(lattice[d.subset] == d.expected_trace for d in catalog)
    return BasisReport(n, catalog, cert, match, _certificate_text(n, catalog, cert))


@dataclass
class CrosscheckResult:
    label: str
    expected: float
    value: float | None
    deviation: float
    tolerance: float
    skipped: str | None = None

    @property
    def passed(self) -> bool:
        return self.skipped is not None or self.deviation <= self.tolerance

    def as_dict(self) -> dict:
        return {"label": self.label, "expected": self.expected, "value": self.value,
                "deviation": self.deviation, "tolerance": self.tolerance, "skipped": self.skipped,
                "pass": self.passed}


DEFAULT_WINDOWS = {1: 12, 2: 2}
DEFAULT_TOLERANCES = {1: 1e-3, 2: 1e-2}


def numeric_trace_crosscheck(descriptor: GeneratorDescriptor, window: int | None = None,
                             tolerance: float | None = None) -> CrosscheckResult:
    """Numeric module trace at the rotated parameter versus the expected minor.

    A single Gaussian only generates a projection when the minor lies in (0, 1);
    other cases and ``p' > 2`` are reported as skipped.
    """
    from .bimodule import ModuleElement, embeddings_for, module_trace_report

    p, q = descriptor.shape
    expected = float(descriptor.expected_trace)
    tol = tolerance if tolerance is not None else DEFAULT_TOLERANCES.get(p, 1e-2)
    if descriptor.is_trivial:
        return CrosscheckResult(descriptor.label, 1.0, 1.0, 0.0, tol)
    if p > 2:
        return CrosscheckResult(descriptor.label, expected, None, 0.0, tol, "p' > 2 is beyond desk scale")
    if not 0 < expected < 1:
        return CrosscheckResult(descriptor.label, expected, None, 0.0, tol,
                                "minor outside (0, 1): a single Gaussian gives no projection")
    window = window or DEFAULT_WINDOWS[p]
    E = embeddings_for(descriptor.rotated.to_numpy(), p)
    rep = module_trace_report(ModuleElement.gaussian(p, q), E, window)
    return CrosscheckResult(descriptor.label, expected, rep.value, abs(rep.value - expected), tol)
