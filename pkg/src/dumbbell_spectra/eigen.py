"""Smallest eigenpairs of ``K u = lambda M u`` and even/odd classification.

The solver runs Lanczos on ``(K + M)^{-1} M`` (shift ``sigma = -1``) in the
``M`` inner product with full reorthogonalization; each step costs one
:class:`~dumbbell_spectra.ldlt.LdltFactor` solve.  Ritz values ``theta`` map
back through ``lambda = sigma + 1/theta``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

from .errors import AmbiguousCluster, NoConvergence
from .ldlt import LdltFactor, factorize

SIGMA = -1.0


class Parity(str, enum.Enum):
    EVEN = "Even"
    ODD = "Odd"


@dataclass
class EigenPair:
    """One eigenpair with an ``M``-normalized vertex vector.

    ``symmetry`` stays None until :func:`classify_symmetry` runs;
    ``sym_defect`` is then the smaller of ``|u - Pu|_M / 2`` and
    ``|u + Pu|_M / 2``.
    """

    lam: float
    vector: np.ndarray
    residual: float
    index_1based: int
    symmetry: Parity | None = None
    sym_defect: float | None = None

    @property
    def label(self) -> str | None:
        return None if self.symmetry is None else self.symmetry.value


def _m_norm(M, v):
    return float(np.sqrt(max(v @ (M @ v), 0.0)))


def start_vector(n: int, seed: int) -> np.ndarray:
    """Seeded random vector with a deliberate constant component.

    The constant shift keeps the start vector from being (nearly) orthogonal
    to the Neumann null space, so the zero mode is always present.
    """
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1.0


def residuals(K, M, lams, U) -> np.ndarray:
    """``|K u - lam M u|_2 / |u|_2`` for each column of ``U``."""
    R = K @ U - (M @ U) * lams[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(U, axis=0)


def smallest_eigenpairs(K, M, k: int, tol: float = 1e-8, max_krylov: int | None = None,
                        seed: int = 0, factor: LdltFactor | None = None) -> list[EigenPair]:
    """The ``k`` smallest eigenpairs of the pencil ``(K, M)``.

    Parameters
    ----------
    K, M : sparse symmetric matrices
        ``K`` positive semidefinite, ``M`` positive definite.
    k : int
        Number of pairs wanted.
    tol : float
        Bound on the reported residual ``|Ku - lam Mu|_2 / |u|_2``.
    max_krylov : int, optional
        Krylov dimension cap, default ``max(4k, k + 200)`` clipped to ``n``.
    seed : int
        Seed of the start vector.
    factor : LdltFactor, optional
        Precomputed factorization of ``K + M``.

    Raises
    ------
    NoConvergence
        If the cap is reached before ``k`` pairs meet ``tol``.
    """
    K = sp.csr_matrix(K)
    M = sp.csr_matrix(M)
    n = K.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must lie in [1, {n}]")
    cap = max_krylov if max_krylov is not None else max(4 * k, k + 200)
    cap = int(min(max(cap, k), n))
    if factor is None:
        factor = factorize((K - SIGMA * M).tocsr())

    rng = np.random.default_rng(seed + 7919)
    Q = np.zeros((n, cap + 1))
    alpha = np.zeros(cap)
    beta = np.zeros(cap + 1)

    v = start_vector(n, seed)
    v /= _m_norm(M, v)
    Q[:, 0] = v
    j_done = 0
    check_every = max(5, k // 4)
    result = None
    for j in range(cap):
        qj = Q[:, j]
        w = factor.solve(M @ qj)
        Mw = M @ w
        a = float(qj @ Mw)
        alpha[j] = a
        w -= a * qj
        if j > 0:
            w -= beta[j] * Q[:, j - 1]
        # two rounds of classical Gram-Schmidt against the whole basis
        nrm0 = _m_norm(M, w)
        for _ in range(2):
            c = Q[:, : j + 1].T @ (M @ w)
            w -= Q[:, : j + 1] @ c
        b = _m_norm(M, w)
        j_done = j + 1
        if b <= 1e-10 * max(nrm0, abs(a)) or j + 1 == n:
            # invariant subspace: restart with a fresh orthogonal direction
            beta[j + 1] = 0.0
            if j + 1 < cap:
                w = rng.standard_normal(n)
                for _ in range(2):
                    c = Q[:, : j + 1].T @ (M @ w)
                    w -= Q[:, : j + 1] @ c
                Q[:, j + 1] = w / _m_norm(M, w)
        else:
            beta[j + 1] = b
            Q[:, j + 1] = w / b
        if j_done >= k and (j_done % check_every == 0 or j_done == cap):
            result = _try_converge(K, M, Q, alpha, beta, j_done, k, tol)
            if result is not None:
                break
    if result is None:
        result = _try_converge(K, M, Q, alpha, beta, j_done, k, tol)
    if result is None:
        theta, S = eigh_tridiagonal(alpha[:j_done], beta[1:j_done])
        est = np.abs(beta[j_done] * S[-1, :])
        ok = int(np.sum(est[::-1][:k] <= 1e-12 * np.abs(theta[::-1][:k])))
        raise NoConvergence(j_done, ok, k)
    lams, U, res = result
    return [EigenPair(float(lams[i]), U[:, i], float(res[i]), i + 1) for i in range(k)]


def _try_converge(K, M, Q, alpha, beta, m, k, tol):
    if m < 1:
        return None
    if m == 1:
        theta, S = np.array([alpha[0]]), np.ones((1, 1))
    else:
        theta, S = eigh_tridiagonal(alpha[:m], beta[1:m])
    order = np.argsort(theta)[::-1][:k]
    if len(order) < k:
        return None
    est = np.abs(beta[m] * S[-1, order])
    if np.any(est > 1e-10 * np.abs(theta[order])):
        return None
    U = Q[:, :m] @ S[:, order]
    for i in range(k):
        U[:, i] /= _m_norm(M, U[:, i])
    lams = SIGMA + 1.0 / theta[order]
    srt = np.argsort(lams, kind="stable")
    lams, U = lams[srt], U[:, srt]
    res = residuals(K, M, lams, U)
    if np.any(res > tol):
        return None
    return lams, U, res


# ------------------------------------------------------------------ symmetry

def _mirror_matrix(M, U, mirror):
    return U.T @ (M @ U[mirror, :])


def classify_symmetry(pairs: list[EigenPair], mirror, M, gap_tol: float = 1e-6,
                      K=None) -> list[EigenPair]:
    """Label each pair Even or Odd under the vertex permutation ``mirror``.

    Pairs whose eigenvalues agree within ``gap_tol`` (relative) form a
    cluster; inside a cluster the reflection is diagonalized and the pairs
    are replaced by the rotated even/odd vectors (eigenvalues become the
    Rayleigh quotients when ``K`` is given, otherwise the cluster mean).
    Clusters larger than two trigger an :class:`AmbiguousCluster` warning.
    """
    mirror = np.asarray(mirror)
    M = sp.csr_matrix(M)
    out = []
    i = 0
    n = len(pairs)
    while i < n:
        j = i + 1
        while j < n and abs(pairs[j].lam - pairs[j - 1].lam) <= gap_tol * max(
                abs(pairs[j].lam), abs(pairs[j - 1].lam), 1e-300):
            j += 1
        group = pairs[i:j]
        if len(group) == 1:
            out.append(_label(group[0], mirror, M))
        else:
            if len(group) > 2:
                warnings.warn(f"eigenvalue cluster of size {len(group)} near {group[0].lam:.6g}",
                              AmbiguousCluster, stacklevel=2)
            out.extend(_rotate_cluster(group, mirror, M, K))
        i = j
    return out


def _label(p: EigenPair, mirror, M) -> EigenPair:
    u = p.vector
    nu = _m_norm(M, u)
    asym = _m_norm(M, u - u[mirror]) / (2 * nu)
    sym = _m_norm(M, u + u[mirror]) / (2 * nu)
    p.symmetry = Parity.EVEN if asym <= sym else Parity.ODD
    p.sym_defect = float(min(asym, sym))
    return p


def _rotate_cluster(group, mirror, M, K):
    U = np.column_stack([p.vector for p in group])
    R = _mirror_matrix(M, U, mirror)
    R = 0.5 * (R + R.T)
    vals, V = np.linalg.eigh(R)
    W = U @ V
    out = []
    mean = float(np.mean([p.lam for p in group]))
    for c in range(W.shape[1]):
        u = W[:, c] / _m_norm(M, W[:, c])
        lam = float(u @ (K @ u)) if K is not None else mean
        res = float(np.linalg.norm(K @ u - lam * (M @ u)) / np.linalg.norm(u)) if K is not None \
            else max(p.residual for p in group)
        out.append(_label(EigenPair(lam, u, res, 0), mirror, M))
    out.sort(key=lambda p: p.lam)
    base = group[0].index_1based
    for off, p in enumerate(out):
        p.index_1based = base + off
    return out


def m_orthogonality(pairs, M) -> float:
    """Largest off-diagonal entry of ``U^T M U``."""
    U = np.column_stack([p.vector for p in pairs])
    G = U.T @ (M @ U)
    np.fill_diagonal(G, 0.0)
    return float(np.max(np.abs(G))) if len(pairs) > 1 else 0.0
