"""Command-line front end: ``nctorus <subcommand> ...``.

Every subcommand prints a report (JSON by default) with a top-level ``"pass"``
flag.  Exit status is 0 on pass, 1 when a check fails and 2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bimodule, cocycle, elliott, field as fieldmod, ktheory, normalize
from .scalar import FLOAT, POLYNOMIAL, RATIONAL, BackendError, format_scalar
from .skewmat import (SkewMatrix, SkewMatrixError, determinant, load_matrix, pfaffian,
                      pfaffian_minor, all_pfaffian_minors)

SCHEMA = 1
DEFAULT_SEED = 20240101


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    matrix: str | None = None
    psi: str | None = None
    symbolic: int | None = None
    n: int | None = None
    p: int | None = None
    q: int | None = None
    window: int = 8
    samples: int = 1000
    radius: int = 2
    shift: int = 1
    tol: float = 1e-10
    seed: int = DEFAULT_SEED
    checks: tuple = ("commute", "cocycle", "imprimitivity", "trace")
    numeric_crosscheck: bool = False
    output: str | None = None
    fmt: str = "json"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tol <= 0:
            raise InputError("tolerances must be positive")
        if self.window < 1:
            raise InputError("window must be at least 1")
        if self.samples < 1:
            raise InputError("sample count must be at least 1")


def _label(s) -> str:
    return "{" + ",".join(map(str, s)) + "}"


def _scalar(x):
    return x if isinstance(x, float) else format_scalar(x)


def _matrix(cfg: RunConfig, path: str | None = None) -> SkewMatrix:
    path = path or cfg.matrix
    if path:
        try:
            return load_matrix(path)
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    if cfg.symbolic is not None:
        if cfg.symbolic < 0:
            raise InputError("--symbolic needs n >= 0")
        return SkewMatrix.symbolic(cfg.symbolic)
    raise InputError("give --matrix FILE or --symbolic N")


def _split(cfg: RunConfig, A: SkewMatrix):
    p = cfg.p if cfg.p is not None else A.p
    if p is None:
        raise InputError("block split needed: pass --p (and optionally --q)")
    q = A.n - 2 * p if cfg.q is None else cfg.q
    if p < 0 or q < 0 or 2 * p + q != A.n:
        raise InputError(f"p={p}, q={q} inconsistent with n={A.n}")
    return p, q


# ---------------------------------------------------------------------------
# subcommands


def cmd_pfaffian(cfg):
    A = _matrix(cfg)
    if A.n % 2:
        raise InputError(f"pfaffian needs even n, got {A.n}")
    pf = pfaffian(A)
    det = determinant(A)
    if A.backend == FLOAT:
        ok = abs(pf * pf - det) <= 1e-9 * max(1.0, abs(det))
    else:
        ok = pf * pf == det
    return {"n": A.n, "backend": A.backend, "pfaffian": _scalar(pf), "determinant": _scalar(det),
            "checks": {"pf_squared_equals_det": ok}, "pass": ok, "_text": format_scalar(pf)}


def cmd_minors(cfg):
    A = _matrix(cfg)
    rows, ok = [], True
    for s, v in all_pfaffian_minors(A):
        e = elliott.elliott_generator(A, s)
        same = abs(v - e) <= 1e-12 * (1 + abs(v)) if A.backend == FLOAT else v == e
        ok &= same
        rows.append({"subset": list(s), "minor": _scalar(v), "matching_sum_agrees": same})
    text = "\n".join(f"{_label(r['subset'])}: {r['minor']}" for r in rows)
    return {"n": A.n, "minors": rows, "pass": ok, "_text": text}


def _monic_of_degree(poly, degree: int) -> bool:
    coeffs = poly.univariate_coefficients(normalize.SHIFT_SYMBOL)
    return len(coeffs) == degree + 1 and coeffs[-1] == 1


def cmd_shift(cfg):
    A = _matrix(cfg)
    if A.backend != RATIONAL:
        raise InputError("shift needs an exact rational matrix")
    rep = normalize.find_positive_shift(A)
    monic = all(_monic_of_degree(poly, len(s) // 2) for s, poly in rep.polynomials.items())
    ok = all(v > 0 for s, v in rep.minors if s) and monic
    if rep.t > 0:
        prev = normalize.shifted(A, rep.t - 1)
        ok &= any(pfaffian_minor(prev, s) <= 0 for s, _ in rep.minors if s)
    return {"n": A.n, "t": rep.t, "bound": format_scalar(rep.bound),
            "polynomials": {_label(s): str(p) for s, p in rep.polynomials.items()},
            "minors_after_shift": {_label(s): format_scalar(v) for s, v in rep.minors},
            "class_preserved": normalize.shift_preserves_class(A, rep.t) if A.n else True,
            "pass": ok, "_text": f"t = {rep.t}"}


def cmd_trace_range(cfg):
    A = _matrix(cfg)
    lat = elliott.trace_lattice(A)
    gens = {_label(s): _scalar(v) for s, v in lat.generators}
    out = {"n": A.n, "rank_bound": ktheory.k0_rank(A.n) if A.n else 1, "generators": gens, "pass": True}
    if A.backend == RATIONAL:
        out["subgroup_generator"] = format_scalar(elliott.rational_lattice_reduce(lat))
    if A.backend == POLYNOMIAL:
        cert = elliott.basis_certificate(A)
        out["rank"] = cert.rank
    out["_text"] = "\n".join(f"{k}: {v}" for k, v in gens.items())
    return out


def cmd_basis_report(cfg):
    if cfg.matrix:
        theta = _matrix(cfg)
        if cfg.n is not None and cfg.n != theta.n:
            raise InputError(f"--n {cfg.n} does not match the {theta.n}x{theta.n} matrix")
    elif cfg.n is not None:
        if cfg.n < 1:
            raise InputError("--n must be at least 1")
        theta = SkewMatrix.symbolic(cfg.n)
    else:
        raise InputError("give --n N or --matrix FILE")
    if theta.backend == POLYNOMIAL:
        rep = ktheory.basis_report(theta)
    else:
        catalog = ktheory.generator_catalog(theta)
        rep = ktheory.basis_report(n=theta.n)
        rep.catalog = catalog  # numeric catalog; the certificate stays symbolic
    if cfg.numeric_crosscheck:
        if theta.backend == POLYNOMIAL:
            raise InputError("--numeric-crosscheck needs a numeric --matrix")
        window = cfg.extra.get("window_given") and cfg.window
        for d in rep.catalog:
            rep.crosschecks[d.label] = ktheory.numeric_trace_crosscheck(d, window or None).as_dict()
    out = rep.as_dict()
    out["_text"] = rep.text
    return out


def cmd_cocycle_check(cfg):
    A = _matrix(cfg)
    if A.backend == POLYNOMIAL:
        raise InputError("cocycle check needs numeric entries")
    omega = cocycle.PhaseCocycle.from_matrix(A)
    checks = {}
    if A.backend == RATIONAL:
        box = cocycle.verify_cocycle_box(A, cfg.radius)
        checks["identity_box"] = {"checked": box.checked, "pass": box.passed,
                                  "witness": ([[int(a) for a in v] for v in box.witness]
                                              if isinstance(box.witness, tuple) else box.witness)}
    rnd = cocycle.verify_cocycle(omega, cfg.samples, tol=cfg.tol, seed=cfg.seed)
    checks["identity_random"] = {"checked": rnd.checked, "defect": rnd.defect, "pass": rnd.passed}
    rng = np.random.default_rng(cfg.seed)
    coeffs = [Fraction(int(c), 7) for c in rng.integers(-6, 7, size=A.n)]
    if A.backend == RATIONAL:
        f = lambda x: sum((c * v * v for c, v in zip(coeffs, x)), Fraction(0))  # noqa: E731
    else:
        f = lambda x: sum(float(c) * v * v for c, v in zip(coeffs, x))  # noqa: E731
    twisted = cocycle.twist_by_coboundary(omega, f)
    tw = cocycle.verify_cocycle(twisted, cfg.samples, tol=cfg.tol, seed=cfg.seed + 1)
    inv0, inv1 = cocycle.cocycle_invariant(omega), cocycle.cocycle_invariant(twisted)
    same = inv0 == inv1 if A.backend == RATIONAL else all(
        min(abs(a - b) % 1, 1 - abs(a - b) % 1) <= cfg.tol for a, b in zip(inv0, inv1))
    checks["coboundary_twist"] = {"identity": tw.passed, "invariant_preserved": same, "pass": tw.passed and same}
    if A.backend == RATIONAL and A.n:
        ok = normalize.shift_preserves_class(A, cfg.shift)
        checks["integer_shift"] = {"t": cfg.shift, "pass": ok}
    ok = all(c["pass"] for c in checks.values())
    inv = [_scalar(v) for v in cocycle.cohomology_invariant(A)]
    return {"n": A.n, "invariant": inv, "checks": checks, "pass": ok}


def cmd_field_check(cfg):
    psi = _matrix(cfg, cfg.psi).to_float()
    theta = _matrix(cfg).to_float()
    if psi.n != theta.n:
        raise InputError("endpoint matrices have different sizes")
    p, q = _split(cfg, theta)
    try:
        path = fieldmod.build_path(psi, theta, p, q)
    except fieldmod.FactorizationError as exc:
        raise InputError(f"endpoint not admissible: {exc}") from exc
    rep = fieldmod.check_path(path, cfg.samples)
    out = rep.as_dict()
    out.update({"n": theta.n, "p": p, "q": q})
    return out


def cmd_module_sim(cfg):
    A = _matrix(cfg).to_float()
    p, q = _split(cfg, A)
    try:
        E = bimodule.embeddings_for(A, p)
    except fieldmod.FactorizationError as exc:
        raise InputError(f"leading block not admissible: {exc}") from exc
    rng = np.random.default_rng(cfg.seed)
    f = bimodule.ModuleElement.gaussian(p, q)
    g = bimodule.ModuleElement.gaussian(p, q, center=rng.normal(scale=0.3, size=p),
                                        freq=rng.normal(scale=0.3, size=p))
    n = A.n
    checks = {}
    pairs = [(rng.integers(-3, 4, size=n), rng.integers(-3, 4, size=n)) for _ in range(20)]
    if "commute" in cfg.checks:
        dev = 0.0
        for l, m in pairs:
            u = bimodule.act_B(l, bimodule.act_A(g, m, E), E)
            v = bimodule.act_A(bimodule.act_B(l, g, E), m, E)
            dev = max(dev, float(np.abs(u.coefs - v.coefs).max()), float(np.abs(u.centers - v.centers).max(initial=0)))
        checks["commute"] = {"deviation": dev, "tolerance": cfg.tol, "pass": dev <= cfg.tol}
    if "cocycle" in cfg.checks:
        da = db = 0.0
        for l, m in pairs:
            r = bimodule.act_A(bimodule.act_A(g, l, E), m, E).coefs / bimodule.act_A(g, l + m, E).coefs
            da = max(da, float(np.abs(r - np.exp(1j * np.pi * (l @ E.a_param @ m))).max()))
            r = bimodule.act_B(l, bimodule.act_B(m, g, E), E).coefs / bimodule.act_B(l + m, g, E).coefs
            db = max(db, float(np.abs(r - np.exp(1j * np.pi * (l @ E.b_param @ m))).max()))
        checks["cocycle"] = {"deviation_A": da, "deviation_B": db, "tolerance": cfg.tol,
                             "pass": max(da, db) <= cfg.tol}
    if "imprimitivity" in cfg.checks:
        rep = bimodule.imprimitivity_check(f, g, f, E, cfg.window)
        checks["imprimitivity"] = {"window": cfg.window, "deviation": rep.deviation, "kappa": rep.kappa,
                                   "pass": rep.deviation <= 1e-6 * max(1.0, rep.scale)}
    if "trace" in cfg.checks:
        try:
            window = cfg.window if cfg.extra.get("window_given") else ktheory.DEFAULT_WINDOWS.get(p, 2)
            rep = bimodule.module_trace_report(f, E, window)
            tol = ktheory.DEFAULT_TOLERANCES.get(p, 1e-2)
            checks["trace"] = {"value": rep.value, "pfaffian": rep.pfaffian, "pfaffian_sign": rep.pfaffian_sign,
                               "deviation": rep.deviation, "window": window, "tolerance": tol,
                               "pass": rep.deviation <= tol}
        except bimodule.TruncationError as exc:
            checks["trace"] = {"error": str(exc), "pass": False}
    return {"n": n, "p": p, "q": q, "kappa": E.kappa, "checks": checks,
            "pass": all(c["pass"] for c in checks.values())}


COMMANDS = {
    "pfaffian": cmd_pfaffian,
    "minors": cmd_minors,
    "shift": cmd_shift,
    "trace-range": cmd_trace_range,
    "basis-report": cmd_basis_report,
    "cocycle-check": cmd_cocycle_check,
    "field-check": cmd_field_check,
    "module-sim": cmd_module_sim,
}


# ---------------------------------------------------------------------------
# plumbing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nctorus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, matrix=True):
        if matrix:
            sp.add_argument("--matrix", help="JSON matrix file")
            sp.add_argument("--symbolic", type=int, metavar="N", help="use the symbolic N x N matrix")
        sp.add_argument("--format", dest="fmt", choices=("json", "text"), default="json")
        sp.add_argument("--output", help="write the report here instead of stdout")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        return sp

    common(sub.add_parser("pfaffian", help="pfaffian and determinant check"))
    common(sub.add_parser("minors", help="all pfaffian minors against the matching sums"))
    common(sub.add_parser("shift", help="minimal integer shift making all minors positive"))
    common(sub.add_parser("trace-range", help="generators of the trace range"))
    sp = common(sub.add_parser("basis-report", help="K_0 generator catalog and basis certificate"), matrix=False)
    sp.add_argument("--matrix")
    sp.add_argument("--n", type=int)
    sp.add_argument("--numeric-crosscheck", action="store_true")
    sp.add_argument("--window", type=int)
    sp = common(sub.add_parser("cocycle-check", help="cocycle identity, twists and shift invariance"))
    sp.add_argument("--radius", type=int, default=2)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--shift", type=int, default=1)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp = common(sub.add_parser("field-check", help="positive-pfaffian path between two parameters"), matrix=False)
    sp.add_argument("--psi", required=True, help="matrix file for the r = 0 endpoint")
    sp.add_argument("--theta", dest="matrix", required=True, help="matrix file for the r = 1 endpoint")
    sp.add_argument("--p", type=int)
    sp.add_argument("--q", type=int)
    sp.add_argument("--samples", type=int, default=1000)
    sp = common(sub.add_parser("module-sim", help="bimodule laws and numeric module trace"))
    sp.add_argument("--p", type=int)
    sp.add_argument("--q", type=int)
    sp.add_argument("--window", type=int)
    sp.add_argument("--checks", default="commute,cocycle,imprimitivity,trace")
    sp.add_argument("--tol", type=float, default=1e-10)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    kw = {k: v for k, v in vars(ns).items() if v is not None}
    extra = {"window_given": "window" in kw}
    if "checks" in kw:
        kw["checks"] = tuple(c.strip() for c in kw["checks"].split(",") if c.strip())
        unknown = set(kw["checks"]) - {"commute", "cocycle", "imprimitivity", "trace"}
        if unknown:
            raise InputError(f"unknown checks: {', '.join(sorted(unknown))}")
    return RunConfig(extra=extra, **kw)


def _render(report: dict, cfg: RunConfig) -> str:
    text = report.pop("_text", None)
    report = {"schema": SCHEMA, "command": cfg.command, **report}
    if cfg.fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    lines = [text] if text else [f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in sorted(report.items())]
    lines.append("PASS" if report["pass"] else "FAIL")
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig) -> tuple:
    """Execute one subcommand; returns ``(exit_status, rendered_report)``."""
    report = COMMANDS[cfg.command](cfg)
    return (0 if report["pass"] else 1), _render(report, cfg)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        status, out = run(cfg)
    except (InputError, SkewMatrixError, BackendError, ValueError) as exc:
        print(f"nctorus {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
