"""Heisenberg bimodule over M = R^p x Z^q, realized on finite sums of Gaussian atoms.

Points of G = M x M^ are stored as real vectors in the coordinate order
``(x in R^p, w in R^p, k in Z^q, tau in T^q)``.  The time-frequency shift

    pi(X) f(x, k) = e(-(y.eta + j.sigma)/2) e(x.eta + k.sigma) f(x - y, k - j),

for ``X = (y, eta, j, sigma)``, covers both module actions: ``f U_l = pi(T l) f``
and ``V_l f = pi(-S l) f``.  Shifts send Gaussian atoms to Gaussian atoms, and the
L^2 overlap of two atoms has a closed form, so everything below is exact up to
the truncation of the Z^n sums.

The torus coordinate ``sigma`` enters the quadratic phase unreduced; it is only
reduced mod 1 inside the pairing ``e(k.sigma)`` where ``k`` is an integer.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .skewmat import SkewMatrix, pfaffian

TWO_PI = 2.0 * np.pi


class TruncationError(ArithmeticError):
    """The truncated representation of an algebra element is not invertible."""


def _e(phase):
    return np.exp(1j * TWO_PI * phase)


# ---------------------------------------------------------------------------
# embeddings


@dataclass(frozen=True)
class EmbeddingMaps:
    p: int
    q: int
    gamma: np.ndarray
    t11: np.ndarray
    T: np.ndarray
    S: np.ndarray
    J: np.ndarray
    Jp: np.ndarray

    @property
    def n(self) -> int:
        return 2 * self.p + self.q

    @property
    def a_param(self) -> np.ndarray:
        """Cocycle parameter of the right action: ``T^T J T`` (equals gamma)."""
        return self.T.T @ self.J @ self.T

    @property
    def b_param(self) -> np.ndarray:
        """Cocycle parameter of the left action: ``-S^T J S``."""
        return -self.S.T @ self.J @ self.S

    @property
    def kappa(self) -> float:
        """Covolume ``|det T11|`` linking the two inner products."""
        return abs(float(np.linalg.det(self.t11))) if self.p else 1.0

    @property
    def pfaffian_sign(self) -> int:
        if not self.p:
            return 1
        return 1 if pfaffian(SkewMatrix.from_numpy(self.gamma[:2 * self.p, :2 * self.p])) > 0 else -1

    def t_points(self, ls) -> np.ndarray:
        return np.atleast_2d(np.asarray(ls, dtype=float)) @ self.T.T

    def s_points(self, ls) -> np.ndarray:
        return np.atleast_2d(np.asarray(ls, dtype=float)) @ self.S.T


def _j_blocks(p: int, q: int):
    k = 2 * p + 2 * q
    J = np.zeros((k, k))
    J[:p, p:2 * p] = np.eye(p)
    J[p:2 * p, :p] = -np.eye(p)
    J[2 * p:2 * p + q, 2 * p + q:] = np.eye(q)
    J[2 * p + q:, 2 * p:2 * p + q] = -np.eye(q)
    return J, np.where(J < 0, 0.0, J)


def build_embeddings(gamma, t11, p: int, q: int | None = None, tol: float = 1e-10) -> EmbeddingMaps:
    """Assemble ``T``, ``S``, ``J`` and ``J'`` from a fiber parameter and its factor.

    ``T = [[T11, 0], [0, I_q], [g21, T32]]`` and
    ``S = [[J0 T11^-T, -J0 T11^-T g21^T], [0, I_q], [0, T32^T]]``, with ``T32`` the
    strict upper triangle of ``g22``.
    """
    g = gamma.to_numpy() if isinstance(gamma, SkewMatrix) else np.asarray(gamma, dtype=float)
    n = g.shape[0]
    q = n - 2 * p if q is None else q
    if 2 * p + q != n:
        raise ValueError("n must equal 2p + q")
    k = 2 * p
    t11 = np.asarray(t11, dtype=float).reshape(k, k)
    J0 = _j_blocks(p, 0)[0]
    resid = np.abs(t11.T @ J0 @ t11 - g[:k, :k]).max(initial=0.0)
    if resid > tol * max(1.0, np.abs(g).max(initial=0.0)):
        raise ValueError(f"T11^T J0 T11 misses gamma_11 by {resid:.2e}")
    g21, g22 = g[k:, :k], g[k:, k:]
    t32 = np.triu(g22, 1)
    T = np.zeros((2 * p + 2 * q, n))
    T[:k, :k] = t11
    T[k:k + q, k:] = np.eye(q)
    T[k + q:, :k] = g21
    T[k + q:, k:] = t32
    S = np.zeros_like(T)
    if p:
        top = J0 @ np.linalg.inv(t11).T
        S[:k, :k] = top
        S[:k, k:] = -top @ g21.T
    S[k:k + q, k:] = np.eye(q)
    S[k + q:, k:] = t32.T
    J, Jp = _j_blocks(p, q)
    return EmbeddingMaps(p, q, g, t11, T, S, J, Jp)


def embeddings_for(gamma, p: int) -> EmbeddingMaps:
    """Embeddings at a fiber, with ``T11`` from the symplectic factorization."""
    from .field import skew_factorize

    g = gamma.to_numpy() if isinstance(gamma, SkewMatrix) else np.asarray(gamma, dtype=float)
    t11 = skew_factorize(g[:2 * p, :2 * p]) if p else np.zeros((0, 0))
    return build_embeddings(g, t11, p)


# ---------------------------------------------------------------------------
# Gaussian atoms


@dataclass(frozen=True)
class Atom:
    coef: complex
    center: tuple
    freq: tuple
    width: tuple
    site: tuple = ()


@dataclass(frozen=True, eq=False)
class ModuleElement:
    """Finite sum of atoms ``c exp(-pi (x-a)^T W (x-a)) e(b.x) [k = s]``."""

    coefs: np.ndarray
    centers: np.ndarray
    freqs: np.ndarray
    widths: np.ndarray
    sites: np.ndarray

    def __post_init__(self):
        N = len(self.coefs)
        p = self.centers.shape[1]
        if self.freqs.shape != (N, p) or self.widths.shape != (N, p, p) or len(self.sites) != N:
            raise ValueError("inconsistent atom arrays")
        for W in self.widths:
            if not np.allclose(W, W.T) or (p and np.linalg.eigvalsh(W).min() <= 0):
                raise ValueError("atom widths must be symmetric positive definite")

    @property
    def p(self) -> int:
        return self.centers.shape[1]

    @property
    def q(self) -> int:
        return self.sites.shape[1]

    def __len__(self):
        return len(self.coefs)

    @classmethod
    def from_atoms(cls, atoms, p: int, q: int = 0) -> "ModuleElement":
        atoms = list(atoms)
        N = len(atoms)
        return cls(np.array([a.coef for a in atoms], dtype=complex).reshape(N),
                   np.array([a.center for a in atoms], dtype=float).reshape(N, p),
                   np.array([a.freq for a in atoms], dtype=float).reshape(N, p),
                   np.array([a.width for a in atoms], dtype=float).reshape(N, p, p),
                   np.array([a.site for a in atoms], dtype=np.int64).reshape(N, q))

    @classmethod
    def gaussian(cls, p: int, q: int = 0, center=None, freq=None, width=None, site=None,
                 coef: complex | None = None) -> "ModuleElement":
        """Single atom; with ``coef=None`` it is scaled to unit L^2 mass."""
        W = np.eye(p) if width is None else np.asarray(width, dtype=float).reshape(p, p)
        if coef is None:
            coef = (max(np.linalg.det(2 * W), 0.0) ** 0.25) if p else 1.0  # bad widths fail below
        atom = Atom(complex(coef), tuple(np.zeros(p) if center is None else center),
                    tuple(np.zeros(p) if freq is None else freq), tuple(map(tuple, W)),
                    tuple(np.zeros(q, dtype=int) if site is None else site))
        return cls.from_atoms([atom], p, q)

    @classmethod
    def zero(cls, p: int, q: int = 0) -> "ModuleElement":
        return cls.from_atoms([], p, q)

    def atoms(self):
        for i in range(len(self)):
            yield Atom(complex(self.coefs[i]), tuple(self.centers[i]), tuple(self.freqs[i]),
                       tuple(map(tuple, self.widths[i])), tuple(int(s) for s in self.sites[i]))

    def scaled(self, c: complex) -> "ModuleElement":
        return ModuleElement(self.coefs * c, self.centers, self.freqs, self.widths, self.sites)

    def __add__(self, other: "ModuleElement") -> "ModuleElement":
        return ModuleElement(*(np.concatenate([a, b]) for a, b in zip(self._arrays(), other._arrays())))

    def _arrays(self):
        return self.coefs, self.centers, self.freqs, self.widths, self.sites

    def evaluate(self, x, k=None) -> np.ndarray:
        """Values at points ``x`` (shape (m, p)) on lattice sites ``k`` (shape (m, q))."""
        x = np.asarray(x, dtype=float).reshape(-1, self.p)
        k = np.zeros((len(x), self.q), dtype=np.int64) if k is None else np.asarray(k).reshape(len(x), self.q)
        out = np.zeros(len(x), dtype=complex)
        for i in range(len(self)):
            d = x - self.centers[i]
            quad = np.einsum("mi,ij,mj->m", d, self.widths[i], d)
            hit = np.all(k == self.sites[i], axis=1)
            out += hit * self.coefs[i] * np.exp(-np.pi * quad) * _e(x @ self.freqs[i])
        return out


def shift_atoms(f: ModuleElement, X) -> ModuleElement:
    """``pi(X) f`` in closed form: centres move by ``y``, frequencies by ``eta``, sites by ``j``."""
    p, q = f.p, f.q
    X = np.asarray(X, dtype=float).reshape(2 * p + 2 * q)
    y, eta, j, sig = X[:p], X[p:2 * p], X[2 * p:2 * p + q], X[2 * p + q:]
    jint = np.rint(j)
    if np.abs(j - jint).max(initial=0.0) > 1e-9:
        raise AssertionError("lattice component of a shift is not an integer")
    jint = jint.astype(np.int64)
    sites = f.sites + jint
    phase = -(f.freqs @ y) - (y @ eta + jint @ sig) / 2 + sites @ np.mod(sig, 1.0)
    return ModuleElement(f.coefs * _e(phase), f.centers + y, f.freqs + eta, f.widths, sites)


def act_A(f: ModuleElement, l, E: EmbeddingMaps) -> ModuleElement:
    """Right action ``f U_l``."""
    return shift_atoms(f, E.t_points(l)[0])


def act_B(l, f: ModuleElement, E: EmbeddingMaps) -> ModuleElement:
    """Left action ``V_l f``."""
    return shift_atoms(f, -E.s_points(l)[0])


def _formula(f, X, Jp, sign):
    p, q = f.p, f.q
    xpart = np.concatenate([X[:p], X[2 * p:2 * p + q]])
    dual = np.concatenate([X[p:2 * p], np.mod(X[2 * p + q:], 1.0)])
    glob = _e(-(X @ Jp @ X) / 2)

    def value(x, k=None):
        x = np.asarray(x, dtype=float).reshape(-1, p)
        k = np.zeros((len(x), q), dtype=np.int64) if k is None else np.asarray(k).reshape(len(x), q)
        pts = np.hstack([x, k])
        pairing = _e(sign * (pts @ dual))
        moved = pts - sign * xpart
        kk = np.rint(moved[:, p:]).astype(np.int64)
        return glob * pairing * f.evaluate(moved[:, :p], kk)

    return value


def right_action_formula(f: ModuleElement, l, E: EmbeddingMaps):
    """Pointwise evaluator of ``f U_l`` straight from the defining formula.

    ``(f U_l)(x) = e(-T(l).J'T(l)/2) <x, T''(l)> f(x - T'(l))``.
    """
    return _formula(f, E.t_points(l)[0], E.Jp, +1)


def left_action_formula(l, f: ModuleElement, E: EmbeddingMaps):
    """Pointwise evaluator of ``V_l f``: ``e(-S(l).J'S(l)/2) <x, -S''(l)> f(x + S'(l))``."""
    return _formula(f, E.s_points(l)[0], E.Jp, -1)


# ---------------------------------------------------------------------------
# overlaps


def _shift_arrays(f: ModuleElement, i: int, X: np.ndarray):
    """Atom ``i`` of ``f`` shifted by every row of ``X``: (coef, centre, freq, site)."""
    p, q = f.p, f.q
    y, eta, j, sig = X[:, :p], X[:, p:2 * p], X[:, 2 * p:2 * p + q], X[:, 2 * p + q:]
    jint = np.rint(j).astype(np.int64)
    sites = f.sites[i] + jint
    phase = (-(y @ f.freqs[i]) - (np.einsum("ni,ni->n", y, eta) + np.einsum("ni,ni->n", jint, sig)) / 2
             + np.einsum("ni,ni->n", sites, np.mod(sig, 1.0)))
    return f.coefs[i] * _e(phase), f.centers[i] + y, f.freqs[i] + eta, sites


def _gauss_overlap(c1, a1, b1, W1, c2, a2, b2, W2):
    """``int conj(phi1) phi2 dx`` for broadcast arrays of atom data with fixed widths."""
    A = W1 + W2
    Ainv = np.linalg.inv(A)
    pref = np.linalg.det(A) ** -0.5
    da = a1 - a2
    K = W1 @ Ainv @ W2
    beta = b2 - b1
    u = a1 @ W1.T + a2 @ W2.T
    quad = np.einsum("...i,ij,...j->...", da, K, da) + np.einsum("...i,ij,...j->...", beta, Ainv, beta)
    lin = np.einsum("...i,ij,...j->...", beta, Ainv, u)
    return np.conj(c1) * c2 * pref * np.exp(-np.pi * quad) * _e(lin)


def l2_inner(f: ModuleElement, g: ModuleElement) -> complex:
    """``int conj(f) g`` over M (Lebesgue on R^p, counting on Z^q), closed form."""
    total = 0j
    for i in range(len(f)):
        for j in range(len(g)):
            if np.array_equal(f.sites[i], g.sites[j]):
                total += complex(_gauss_overlap(f.coefs[i], f.centers[i], f.freqs[i], f.widths[i],
                                                g.coefs[j], g.centers[j], g.freqs[j], g.widths[j]))
    return total


def shifted_overlaps(f: ModuleElement, X: np.ndarray, g: ModuleElement, Y: np.ndarray | None = None) -> np.ndarray:
    """``<pi(X_r) f | pi(Y_r) g>`` for every row ``r`` (``Y = 0`` if omitted)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.zeros_like(X) if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    out = np.zeros(len(X), dtype=complex)
    for i in range(len(f)):
        c1, a1, b1, s1 = _shift_arrays(f, i, X)
        for j in range(len(g)):
            c2, a2, b2, s2 = _shift_arrays(g, j, Y)
            hit = np.all(s1 == s2, axis=1)
            if hit.any():
                out[hit] += _gauss_overlap(c1[hit], a1[hit], b1[hit], f.widths[i],
                                           c2[hit], a2[hit], b2[hit], g.widths[j])
    return out


# ---------------------------------------------------------------------------
# algebra elements


def lattice_box(n: int, window: int) -> np.ndarray:
    r = np.arange(-window, window + 1)
    return np.array(list(itertools.product(r, repeat=n)), dtype=np.int64).reshape(-1, n)


def _site_box(fs, gs, window: int, sign: int) -> np.ndarray:
    """Z^q parts of ``l`` (within the window) that can match a site of ``g`` from a site of ``f``."""
    diffs = {tuple(sign * (t - s)) for s in fs for t in gs}
    return np.array(sorted(d for d in diffs if max(map(abs, d), default=0) <= window),
                    dtype=np.int64).reshape(-1, fs.shape[1])


def _support(f: ModuleElement, g: ModuleElement, window: int, sign: int) -> np.ndarray:
    """Lattice points in the window whose Z^q part can give a nonzero overlap."""
    p2, q = 2 * f.p, f.q
    real = lattice_box(p2, window)
    if not q:
        return real
    if not len(f) or not len(g):
        return np.zeros((0, p2 + q), dtype=np.int64)
    sites = _site_box(f.sites, g.sites, window, sign)
    return np.array([np.concatenate([r, s]) for s in sites for r in real], dtype=np.int64).reshape(-1, p2 + q)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Finitely supported sequence on Z^n with the cocycle ``e(l.theta m / 2)``."""

    indices: np.ndarray
    values: np.ndarray
    param: np.ndarray
    window: int
    tail: float = 0.0
    _lookup: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_lookup", {tuple(int(v) for v in l): i for i, l in enumerate(self.indices)})

    @property
    def n(self) -> int:
        return self.param.shape[0]

    def __getitem__(self, l) -> complex:
        i = self._lookup.get(tuple(int(v) for v in l))
        return 0j if i is None else complex(self.values[i])

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in l): complex(c) for l, c in zip(self.indices, self.values)}

    def trace(self) -> complex:
        return self[(0,) * self.n]

    def adjoint(self) -> "AlgebraElement":
        """``a*(l) = conj(a(-l))`` (the cocycle is trivial on ``(l, -l)``)."""
        return AlgebraElement(-self.indices, np.conj(self.values), self.param, self.window, self.tail)

    def cocycle(self, l, m) -> np.ndarray:
        return _e(np.einsum("...i,ij,...j->...", np.asarray(l, float), self.param, np.asarray(m, float)) / 2)

    def __mul__(self, other: "AlgebraElement") -> "AlgebraElement":
        acc: dict = {}
        for l, a in zip(self.indices, self.values):
            w = a * other.values * self.cocycle(l, other.indices)
            for m, v in zip(other.indices + l, w):
                key = tuple(int(t) for t in m)
                acc[key] = acc.get(key, 0j) + v
        keys = sorted(acc)
        idx = np.array(keys, dtype=np.int64).reshape(-1, self.n)
        return AlgebraElement(idx, np.array([acc[k] for k in keys], dtype=complex), self.param,
                              self.window + other.window)

    def l2_norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


def _edge_tail(idx: np.ndarray, vals: np.ndarray, window: int) -> float:
    if not len(idx):
        return 0.0
    edge = np.abs(idx).max(axis=1) == window
    return float(np.abs(vals[edge]).max(initial=0.0))


def inner_A(f: ModuleElement, g: ModuleElement, E: EmbeddingMaps, window: int = 8) -> AlgebraElement:
    """``<f, g>_A(l) = <f U_l | g>`` for ``||l||_inf <= window``.

    Equal to ``e(-T(l).J'T(l)/2) int <x, -T''(l)> g(x + T'(l)) conj f(x) dx``.
    """
    idx = _support(f, g, window, +1)
    vals = shifted_overlaps(f, E.t_points(idx), g) if len(idx) else np.zeros(0, complex)
    return AlgebraElement(idx, vals, E.a_param, window, _edge_tail(idx, vals, window))


def inner_B(f: ModuleElement, g: ModuleElement, E: EmbeddingMaps, window: int = 8) -> AlgebraElement:
    """``_B<f, g>(l) = <V_l g | f>``.

    Equal to ``e(S(l).J'S(l)/2) int <x, S''(l)> conj g(x + S'(l)) f(x) dx``.
    """
    idx = _support(g, f, window, -1)
    vals = shifted_overlaps(g, -E.s_points(idx), f) if len(idx) else np.zeros(0, complex)
    return AlgebraElement(idx, vals, E.b_param, window, _edge_tail(idx, vals, window))


def right_action(f: ModuleElement, a: AlgebraElement, E: EmbeddingMaps, cutoff: float = 0.0) -> ModuleElement:
    """``f . a = sum_l a(l) f U_l``."""
    out = ModuleElement.zero(f.p, f.q)
    for l, c in zip(a.indices, a.values):
        if abs(c) > cutoff:
            out = out + act_A(f, l, E).scaled(c)
    return out


def left_action(b: AlgebraElement, h: ModuleElement, E: EmbeddingMaps, cutoff: float = 0.0) -> ModuleElement:
    """``b . h = sum_l b(l) V_l h``."""
    out = ModuleElement.zero(h.p, h.q)
    for l, c in zip(b.indices, b.values):
        if abs(c) > cutoff:
            out = out + act_B(l, h, E).scaled(c)
    return out


# ---------------------------------------------------------------------------
# imprimitivity


@dataclass
class ImprimitivityReport:
    window: int
    deviation: float
    scale: float
    kappa: float
    points: int


def sample_points(p: int, radius: float = 3.0, per_axis: int | None = None) -> np.ndarray:
    per_axis = per_axis or (161 if p == 1 else 25)
    axis = np.linspace(-radius, radius, per_axis)
    return np.array(list(itertools.product(axis, repeat=p))).reshape(-1, p)


def imprimitivity_check(f, g, h, E: EmbeddingMaps, window: int = 8, points=None) -> ImprimitivityReport:
    """Max deviation between ``_B<f,g> . h`` and ``kappa f . <g,h>_A`` on sample points.

    ``kappa = |det T11|`` is the covolume normalization of the Haar measure.
    """
    x = sample_points(f.p) if points is None else np.asarray(points, dtype=float).reshape(-1, f.p)
    lhs = left_action(inner_B(f, g, E, window), h, E)
    rhs = right_action(f, inner_A(g, h, E, window), E).scaled(E.kappa)
    sites = {tuple(s) for s in lhs.sites} | {tuple(s) for s in rhs.sites} or {(0,) * f.q}
    worst, scale = 0.0, 0.0
    for s in sorted(sites):
        k = np.tile(np.array(s, dtype=np.int64), (len(x), 1))
        u, v = lhs.evaluate(x, k), rhs.evaluate(x, k)
        worst = max(worst, float(np.abs(u - v).max(initial=0.0)))
        scale = max(scale, float(np.abs(v).max(initial=0.0)))
    return ImprimitivityReport(window, worst, scale, E.kappa, len(x) * len(sites))


# ---------------------------------------------------------------------------
# numeric module trace


def _regular_matrix(b: AlgebraElement, box: np.ndarray) -> np.ndarray:
    """Truncated twisted left-regular representation ``M[k', k] = b(k' - k) w(k' - k, k)``."""
    n = box.shape[1]
    span = 2 * np.abs(box).max(initial=0)
    dense = np.zeros((2 * span + 1,) * n, dtype=complex)
    inside = np.abs(b.indices).max(axis=1, initial=0) <= span if len(b.indices) else np.zeros(0, bool)
    dense[tuple((b.indices[inside] + span).T)] = b.values[inside]
    diff = box[:, None, :] - box[None, :, :]
    vals = dense[tuple(np.moveaxis(diff + span, -1, 0))]
    M = vals * b.cocycle(diff, np.broadcast_to(box[None, :, :], diff.shape))
    return (M + M.conj().T) / 2


def _active_box(f: ModuleElement, window: int, q_window: int) -> np.ndarray:
    """Box for the B-side sums; Z^q axes collapse when every atom sits on one site."""
    real = lattice_box(2 * f.p, window)
    if not f.q:
        return real
    qw = 0 if len({tuple(s) for s in f.sites}) <= 1 else q_window
    lat = lattice_box(f.q, qw)
    return np.array([np.concatenate([r, s]) for s in lat for r in real], dtype=np.int64)


def _dual_points(E: EmbeddingMaps, f: ModuleElement, cutoff: float, q_window: int) -> np.ndarray:
    """Lattice points ``m`` where ``<f U_m | f>`` is not negligible.

    Uses the overlap decay ``exp(-pi/2 (y.W y + eta.W^-1 eta))`` of the widest atom,
    with ``cutoff`` the admitted exponent.
    """
    p, q = E.p, E.q
    W = f.widths[int(np.argmin([np.linalg.eigvalsh(w).min() for w in f.widths]))]
    Q = np.block([[W, np.zeros((p, p))], [np.zeros((p, p)), np.linalg.inv(W)]]) / 2
    L = np.linalg.cholesky(Q).T @ E.t11            # |L m|^2 = m^T T11^T Q T11 m
    Linv = np.linalg.inv(L)
    radius = np.sqrt(cutoff / np.pi)
    spread = np.ptp(f.centers, axis=0).max(initial=0.0) + np.ptp(f.freqs, axis=0).max(initial=0.0)
    radius += spread * np.sqrt(np.linalg.eigvalsh(Q).max())
    bounds = np.ceil(radius * np.linalg.norm(Linv, axis=1)).astype(int)
    grid = np.array(list(itertools.product(*[range(-b, b + 1) for b in bounds])), dtype=np.int64)
    keep = np.einsum("ij,nj->ni", L, grid)
    grid = grid[np.einsum("ni,ni->n", keep, keep) <= radius ** 2]
    if not q:
        return grid
    span = int(np.ptp(f.sites, axis=0).max(initial=0))
    qw = 0 if span == 0 else 2 * q_window + span
    return np.array([np.concatenate([r, s]) for s in lattice_box(q, qw) for r in grid], dtype=np.int64)


@dataclass
class TraceReport:
    value: float
    pfaffian: float
    pfaffian_sign: int
    min_eigenvalue: float
    box_size: int
    dual_size: int
    window: int

    @property
    def deviation(self) -> float:
        return abs(self.value - abs(self.pfaffian))


def module_trace_report(f: ModuleElement, E: EmbeddingMaps, window: int = 12, q_window: int = 4,
                        cutoff: float = 40.0, max_box: int = 20000, chunk: int = 256) -> TraceReport:
    """Trace of the module projection built from ``f``.

    With ``b = _B<f, f>`` the element ``f~ = b^{-1/2} f`` makes ``q = <f~, f~>_A`` a
    multiple of a projection ``e``; idempotency fixes the multiple, and
    ``tr(e) = q(0)^2 / sum_m |q(m)|^2``.  Adjointability gives
    ``q(m) = sum_l b^{-1}(l) <f U_m | V_l f>``, so ``f~`` is never formed.
    """
    if not len(f):
        raise TruncationError("zero element has no module projection")
    box = _active_box(f, window, q_window)
    if len(box) > max_box:
        raise TruncationError(f"truncation box has {len(box)} points (limit {max_box})")
    b = inner_B(f, f, E, 2 * window)
    M = _regular_matrix(b, box)
    w, V = np.linalg.eigh(M)
    if w.min() <= 1e-13 * w.max():
        raise TruncationError(f"truncated B-inner product is not positive definite (min eig {w.min():.2e})")
    zero = int(np.flatnonzero(np.all(box == 0, axis=1))[0])
    d = (V / w) @ V[zero].conj()               # column 0 of M^-1
    dual = _dual_points(E, f, cutoff, q_window)
    S_pts = -E.s_points(box)
    T_pts = E.t_points(dual)
    qvals = np.zeros(len(dual), dtype=complex)
    for start in range(0, len(dual), chunk):
        X = np.repeat(T_pts[start:start + chunk], len(box), axis=0)
        Y = np.tile(S_pts, (len(T_pts[start:start + chunk]), 1))
        G = shifted_overlaps(f, X, f, Y).reshape(-1, len(box))
        qvals[start:start + chunk] = G @ d
    q0 = qvals[int(np.flatnonzero(np.all(dual == 0, axis=1))[0])].real
    value = q0 ** 2 / float(np.sum(np.abs(qvals) ** 2))
    pf = float(pfaffian(SkewMatrix.from_numpy(E.gamma[:2 * E.p, :2 * E.p]))) if E.p else 1.0
    return TraceReport(float(value), pf, E.pfaffian_sign, float(w.min()), len(box), len(dual), window)


def module_trace_numeric(f: ModuleElement, E: EmbeddingMaps, window: int = 12, **kw) -> float:
    return module_trace_report(f, E, window, **kw).value


def module_trace_literal(f: ModuleElement, E: EmbeddingMaps, window: int = 10, inner_window: int = 6,
                         q_window: int = 4) -> tuple:
    """Second route: form ``f~ = b^{-1/2} f`` and read off ``<f~, f~>_A(0)``.

    With the inner products as normalized here ``_B<f~, f~> = 1`` forces
    ``<f~, f~>_A = e / kappa``, so the pair ``(<f~, f~>_A(0), kappa * <f~, f~>_A(0))``
    is returned; the second entry is the trace of ``e``.
    """
    if not len(f):
        raise TruncationError("zero element has no module projection")
    box = _active_box(f, window, q_window)
    M = _regular_matrix(inner_B(f, f, E, 2 * window), box)
    w, V = np.linalg.eigh(M)
    if w.min() <= 1e-13 * w.max():
        raise TruncationError(f"truncated B-inner product is not positive definite (min eig {w.min():.2e})")
    zero = int(np.flatnonzero(np.all(box == 0, axis=1))[0])
    col = (V / np.sqrt(w)) @ V[zero].conj()    # column 0 of M^-1/2
    keep = np.abs(col) > 1e-14 * np.abs(col).max()
    root = AlgebraElement(box[keep], col[keep], E.b_param, window)
    ft = left_action(root, f, E)
    value = inner_A(ft, ft, E, inner_window).trace().real
    return value, E.kappa * value


# ---------------------------------------------------------------------------
# quadrature oracle


def quadrature_inner(f: ModuleElement, g: ModuleElement, order: int = 80) -> complex:
    """``int conj(f) g`` by tensor Gauss-Hermite quadrature on each common site.

    The rule is centred at the mean atom centre and scaled to the narrowest
    width; it evaluates the functions pointwise and never uses overlap formulas.
    """
    p = f.p
    if not len(f) or not len(g):
        return 0j
    u, w = np.polynomial.hermite.hermgauss(order)
    allw = np.concatenate([f.widths, g.widths])
    lam = max(np.linalg.eigvalsh(W).max() for W in allw)
    s = 1.0 / np.sqrt(2 * np.pi * lam)
    centre = np.concatenate([f.centers, g.centers]).mean(axis=0)
    nodes = np.array(list(itertools.product(u, repeat=p))).reshape(-1, p)
    weights = np.prod(np.array(list(itertools.product(w * np.exp(u ** 2), repeat=p))).reshape(-1, p), axis=1)
    x = centre + s * nodes
    total = 0j
    for site in {tuple(t) for t in f.sites} & {tuple(t) for t in g.sites}:
        k = np.tile(np.array(site, dtype=np.int64), (len(x), 1))
        total += s ** p * np.sum(weights * np.conj(f.evaluate(x, k)) * g.evaluate(x, k))
    return complex(total)
