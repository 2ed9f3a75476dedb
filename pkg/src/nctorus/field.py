"""Paths of skew matrices whose leading 2p x 2p block keeps a positive pfaffian.

The leading block is written as ``T^T J0 T`` with ``J0 = [[0, I_p], [-I_p, 0]]``,
so ``pf(T^T J0 T) = det(T) * pf(J0)``.  Moving ``T`` inside the invertible
matrices of fixed determinant sign therefore keeps the pfaffian sign fixed.
The path from ``T_psi`` to ``T_theta`` is ``exp(r log Q) exp(r log P) T_psi`` where
``T_theta T_psi^{-1} = Q P`` is the polar decomposition.  The remaining blocks
move along straight lines.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, polar, schur

from .cocycle import dual_parameter
from .skewmat import SkewMatrix, j0_standard, pfaffian, standard_form_sign


class FactorizationError(ValueError):
    pass


def standard_j0(p: int) -> np.ndarray:
    return j0_standard(p).to_numpy()


def skew_factorize(theta, cond_limit: float = 1e12) -> np.ndarray:
    """Invertible ``T`` with ``T^T J0 T = theta`` for a 2p x 2p skew ``theta`` with pf > 0.

    Symplectic Gram-Schmidt: repeatedly take the pivot pair with the largest
    remaining form value, scale it to a canonical pair, and eliminate it from the
    other basis vectors.  ``det T = pf(theta) * pf(J0)``.
    """
    a = theta.to_numpy() if isinstance(theta, SkewMatrix) else np.asarray(theta, dtype=float)
    k = a.shape[0]
    if k % 2 or a.shape != (k, k):
        raise FactorizationError("need an even-dimensional square matrix")
    p = k // 2
    if k == 0:
        return np.zeros((0, 0))
    pf = pfaffian(SkewMatrix.from_numpy(a, atol=1e-9 * (1 + np.abs(a).max())))
    if not pf > 0:
        raise FactorizationError(f"pfaffian {pf:.3g} is not positive")
    if np.linalg.cond(a) > cond_limit:
        raise FactorizationError("matrix is numerically singular")
    basis = np.eye(k)
    remaining = list(range(k))
    es, fs = [], []
    for _ in range(p):
        vecs = basis[:, remaining]
        form = vecs.T @ a @ vecs
        i, j = np.unravel_index(np.argmax(np.abs(form)), form.shape)
        e = vecs[:, i]
        f = vecs[:, j] / form[i, j]
        es.append(e)
        fs.append(f)
        rest = [remaining[m] for m in range(len(remaining)) if m not in (i, j)]
        for c in rest:
            w = basis[:, c]
            basis[:, c] = w - (w @ a @ f) * e + (w @ a @ e) * f
        remaining = rest
    X = np.column_stack(es + fs)
    T = np.linalg.inv(X)
    resid = np.abs(T.T @ standard_j0(p) @ T - a).max()
    if resid > 1e-10 * max(1.0, np.abs(a).max()):
        raise FactorizationError(f"factorization residual {resid:.2e} too large")
    return T


def _real_log_rotation(Q: np.ndarray) -> np.ndarray:
    """Real skew logarithm of a rotation matrix via its real Schur form."""
    R, U = schur(Q, output="real")
    k = Q.shape[0]
    L = np.zeros((k, k))
    minus = []
    i = 0
    while i < k:
        if i + 1 < k and abs(R[i + 1, i]) > 1e-12:
            blk = R[i:i + 2, i:i + 2]
            phi = np.arctan2(blk[1, 0] - blk[0, 1], blk[0, 0] + blk[1, 1])
            L[i, i + 1], L[i + 1, i] = -phi, phi
            i += 2
        else:
            if R[i, i] < 0:
                minus.append(i)
            i += 1
    if len(minus) % 2:
        raise ValueError("matrix is not a proper rotation")
    for a, b in zip(minus[::2], minus[1::2]):  # paired -1 eigenvalues: half turns
        L[a, b], L[b, a] = -np.pi, np.pi
    L = U @ L @ U.T
    L = (L - L.T) / 2
    if np.abs(expm(L) - Q).max() > 1e-9:
        raise ValueError("rotation logarithm failed to reproduce the matrix")
    return L


def _sym_log(P: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh((P + P.T) / 2)
    return (V * np.log(w)) @ V.T


def random_positive_block(rng: np.random.Generator, p: int, scale: float = 1.0) -> np.ndarray:
    """Random 2p x 2p skew matrix with positive pfaffian (swaps two indices if needed)."""
    a = rng.normal(scale=scale, size=(2 * p, 2 * p))
    a = a - a.T
    if pfaffian(SkewMatrix.from_numpy(a)) < 0:
        a[[0, 1], :] = a[[1, 0], :]
        a[:, [0, 1]] = a[:, [1, 0]]
    return a


@dataclass(frozen=True)
class FieldPath:
    n: int
    p: int
    q: int
    psi: SkewMatrix
    theta: SkewMatrix
    t_psi: np.ndarray
    t_theta: np.ndarray
    log_rot: np.ndarray
    log_pos: np.ndarray

    def factor(self, r: float) -> np.ndarray:
        _check_r(r)
        if r == 1.0:  # exact endpoint instead of exp(log Q) exp(log P) T_psi
            return self.t_theta.copy()
        return expm(r * self.log_rot) @ expm(r * self.log_pos) @ self.t_psi

    def gamma_array(self, r: float) -> np.ndarray:
        _check_r(r)
        k = 2 * self.p
        a0, a1 = self.psi.to_numpy(), self.theta.to_numpy()
        if r in (0.0, 1.0):
            return (a0 if r == 0.0 else a1).copy()
        g = (1 - r) * a0 + r * a1
        T = self.factor(r)
        g11 = T.T @ standard_j0(self.p) @ T
        g[:k, :k] = (g11 - g11.T) / 2
        return g

    def gamma(self, r: float) -> SkewMatrix:
        return SkewMatrix.from_numpy(self.gamma_array(r), self.p, self.q)

    def leading_pfaffian(self, r: float) -> float:
        """pf of the leading block, from the factor: det T(r) * pf(J0)."""
        return float(np.linalg.det(self.factor(r))) * standard_form_sign(self.p)


def _check_r(r):
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"parameter r={r} outside [0, 1]")


def build_path(psi: SkewMatrix, theta: SkewMatrix, p: int, q: int | None = None) -> FieldPath:
    """Path from ``psi`` (r = 0) to ``theta`` (r = 1) with positive leading pfaffian throughout."""
    n = psi.n
    q = n - 2 * p if q is None else q
    if theta.n != n or 2 * p + q != n:
        raise ValueError("endpoint dimensions do not match n = 2p + q")
    psi = SkewMatrix.from_numpy(psi.to_numpy(), p, q)
    theta = SkewMatrix.from_numpy(theta.to_numpy(), p, q)
    t0 = skew_factorize(psi.leading_block())
    t1 = skew_factorize(theta.leading_block())
    M = t1 @ np.linalg.inv(t0)
    if 2 * p:
        Q, P = polar(M)  # M = Q P, det Q = +1 since det M > 0
        log_rot, log_pos = _real_log_rotation(Q), _sym_log(P)
    else:
        log_rot = log_pos = np.zeros((0, 0))
    return FieldPath(n, p, q, psi, theta, t0, t1, log_rot, log_pos)


def sample_fiber(path: FieldPath, r: float) -> tuple:
    """``(gamma(r), T(r), gamma(r)')`` at one fiber of the field."""
    g = path.gamma(r)
    return g, path.factor(r), dual_parameter(g)


@dataclass
class PathReport:
    min_pfaffian: float
    min_margin: float
    max_residual: float
    endpoint_residual: float
    affine_residual: float
    samples: int

    @property
    def passed(self) -> bool:
        return (self.min_pfaffian > 0 and self.min_margin >= 0 and self.max_residual <= 1e-10
                and self.endpoint_residual <= 1e-12 and self.affine_residual <= 1e-12)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("min_pfaffian", "min_margin", "max_residual",
                                               "endpoint_residual", "affine_residual", "samples")} | {
            "pass": self.passed}


def check_path(path: FieldPath, samples: int = 1000) -> PathReport:
    """Sample the path: leading pfaffians, factorization residuals, endpoints, affinity."""
    J = standard_j0(path.p)
    k = 2 * path.p
    a0, a1 = path.psi.to_numpy(), path.theta.to_numpy()
    min_pf, min_margin, max_res, aff = np.inf, np.inf, 0.0, 0.0
    for r in np.linspace(0.0, 1.0, samples):
        g = path.gamma_array(r)
        T = path.factor(r)
        pf = pfaffian(SkewMatrix.from_numpy(g[:k, :k])) if k else 1.0
        min_pf = min(min_pf, pf)
        min_margin = min(min_margin, pf - 1e-8 * (1 + abs(pf)))
        max_res = max(max_res, float(np.abs(T.T @ J @ T - g[:k, :k]).max(initial=0.0)))
        line = (1 - r) * a0 + r * a1
        mask = np.ones_like(g, dtype=bool)
        mask[:k, :k] = False
        aff = max(aff, float(np.abs(g - line)[mask].max(initial=0.0)))
    end = max(float(np.abs(path.gamma_array(0.0) - a0).max()),
              float(np.abs(path.gamma_array(1.0) - a1).max()))
    return PathReport(float(min_pf), float(min_margin), max_res, end, aff, samples)
