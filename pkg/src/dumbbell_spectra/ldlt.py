"""Sparse symmetric LDL^T factorization with approximate minimum degree ordering.

The ordering follows the quotient-graph AMD algorithm as formulated in
Davis' CSparse (``cs_amd``); the factorization is the up-looking LDL^T with an
elimination-tree symbolic phase.  Both run as compiled kernels (see
:mod:`dumbbell_spectra._accel`).  No pivoting is performed, so the input must
be numerically definite, or at least have no vanishing pivots in AMD order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._accel import jit
from .errors import SingularPivot

PIVOT_TOL = 1e-12


# --------------------------------------------------------------------- AMD

@jit
def _flip(i):
    return -i - 2


@jit
def _wclear(mark, lemax, w, n):
    if mark < 2 or mark + lemax < 0:
        for k in range(n):
            if w[k] != 0:
                w[k] = 1
        mark = 2
    return mark


@jit
def _tdfs(j, k, head, nxt, post, stack):
    top = 0
    stack[0] = j
    while top >= 0:
        p = stack[top]
        i = head[p]
        if i == -1:
            top -= 1
            post[k] = p
            k += 1
        else:
            head[p] = nxt[i]
            top += 1
            stack[top] = i
    return k


@jit
def amd_order(n, indptr, indices):
    """Approximate minimum degree permutation of a symmetric pattern.

    ``indptr``/``indices`` describe the full (both triangles) pattern; the
    diagonal is ignored.  Returns ``perm`` with ``perm[k]`` the original index
    eliminated at step ``k``.
    """
    # C: pattern without diagonal, plus elbow room
    cnz = 0
    for j in range(n):
        for p in range(indptr[j], indptr[j + 1]):
            if indices[p] != j:
                cnz += 1
    nzmax = cnz + cnz // 5 + 2 * n + 1
    Ci = np.empty(nzmax, dtype=np.int64)
    Cp = np.empty(n + 1, dtype=np.int64)
    q = 0
    for j in range(n):
        Cp[j] = q
        for p in range(indptr[j], indptr[j + 1]):
            i = indices[p]
            if i != j:
                Ci[q] = i
                q += 1
    Cp[n] = cnz

    P = np.empty(n + 1, dtype=np.int64)
    ln_ = np.empty(n + 1, dtype=np.int64)
    nv = np.empty(n + 1, dtype=np.int64)
    nxt = np.empty(n + 1, dtype=np.int64)
    head = np.empty(n + 1, dtype=np.int64)
    elen = np.empty(n + 1, dtype=np.int64)
    degree = np.empty(n + 1, dtype=np.int64)
    w = np.empty(n + 1, dtype=np.int64)
    hhead = np.empty(n + 1, dtype=np.int64)
    last = P

    dense = max(16, int(10 * np.sqrt(n)))
    dense = min(n - 2, dense)
    for k in range(n):
        ln_[k] = Cp[k + 1] - Cp[k]
    ln_[n] = 0
    for i in range(n + 1):
        head[i] = -1
        last[i] = -1
        nxt[i] = -1
        hhead[i] = -1
        nv[i] = 1
        w[i] = 1
        elen[i] = 0
        degree[i] = ln_[i]
    mark = _wclear(0, 0, w, n)
    elen[n] = -2
    Cp[n] = -1
    w[n] = 0
    nel = 0
    for i in range(n):
        d = degree[i]
        if d == 0:
            elen[i] = -2
            nel += 1
            Cp[i] = -1
            w[i] = 0
        elif d > dense:
            nv[i] = 0
            elen[i] = -1
            nel += 1
            Cp[i] = _flip(n)
            nv[n] += 1
        else:
            if head[d] != -1:
                last[head[d]] = i
            nxt[i] = head[d]
            head[d] = i

    mindeg = 0
    lemax = 0
    while nel < n:
        # node of minimum approximate degree
        k = -1
        while mindeg < n:
            k = head[mindeg]
            if k != -1:
                break
            mindeg += 1
        if nxt[k] != -1:
            last[nxt[k]] = -1
        head[mindeg] = nxt[k]
        elenk = elen[k]
        nvk = nv[k]
        nel += nvk

        # garbage collection
        if elenk > 0 and cnz + mindeg >= nzmax:
            for j in range(n):
                p = Cp[j]
                if p >= 0:
                    Cp[j] = Ci[p]
                    Ci[p] = _flip(j)
            q = 0
            p = 0
            while p < cnz:
                j = _flip(Ci[p])
                p += 1
                if j >= 0:
                    Ci[q] = Cp[j]
                    Cp[j] = q
                    q += 1
                    for _k3 in range(ln_[j] - 1):
                        Ci[q] = Ci[p]
                        q += 1
                        p += 1
            cnz = q

        # construct new element
        dk = 0
        nv[k] = -nvk
        p = Cp[k]
        pk1 = p if elenk == 0 else cnz
        pk2 = pk1
        for k1 in range(1, elenk + 2):
            if k1 > elenk:
                e = k
                pj = p
                ln = ln_[k] - elenk
            else:
                e = Ci[p]
                p += 1
                pj = Cp[e]
                ln = ln_[e]
            for _k2 in range(ln):
                i = Ci[pj]
                pj += 1
                nvi = nv[i]
                if nvi <= 0:
                    continue
                dk += nvi
                nv[i] = -nvi
                Ci[pk2] = i
                pk2 += 1
                if nxt[i] != -1:
                    last[nxt[i]] = last[i]
                if last[i] != -1:
                    nxt[last[i]] = nxt[i]
                else:
                    head[degree[i]] = nxt[i]
            if e != k:
                Cp[e] = _flip(k)
                w[e] = 0
        if elenk != 0:
            cnz = pk2
        degree[k] = dk
        Cp[k] = pk1
        ln_[k] = pk2 - pk1
        elen[k] = -2

        # set differences |Le \ Lk|
        mark = _wclear(mark, lemax, w, n)
        for pk in range(pk1, pk2):
            i = Ci[pk]
            eln = elen[i]
            if eln <= 0:
                continue
            nvi = -nv[i]
            wnvi = mark - nvi
            for p in range(Cp[i], Cp[i] + eln):
                e = Ci[p]
                if w[e] >= mark:
                    w[e] -= nvi
                elif w[e] != 0:
                    w[e] = degree[e] + wnvi

        # degree update
        for pk in range(pk1, pk2):
            i = Ci[pk]
            p1 = Cp[i]
            p2 = p1 + elen[i] - 1
            pn = p1
            h = 0
            d = 0
            for p in range(p1, p2 + 1):
                e = Ci[p]
                if w[e] != 0:
                    dext = w[e] - mark
                    if dext > 0:
                        d += dext
                        Ci[pn] = e
                        pn += 1
                        h += e
                    else:
                        Cp[e] = _flip(k)
                        w[e] = 0
            elen[i] = pn - p1 + 1
            p3 = pn
            p4 = p1 + ln_[i]
            for p in range(p2 + 1, p4):
                j = Ci[p]
                nvj = nv[j]
                if nvj <= 0:
                    continue
                d += nvj
                Ci[pn] = j
                pn += 1
                h += j
            if d == 0:
                Cp[i] = _flip(k)
                nvi = -nv[i]
                dk -= nvi
                nvk += nvi
                nel += nvi
                nv[i] = 0
                elen[i] = -1
            else:
                degree[i] = min(degree[i], d)
                Ci[pn] = Ci[p3]
                Ci[p3] = Ci[p1]
                Ci[p1] = k
                ln_[i] = pn - p1 + 1
                h = h % n
                nxt[i] = hhead[h]
                hhead[h] = i
                last[i] = h
        degree[k] = dk
        lemax = max(lemax, dk)
        mark = _wclear(mark + lemax, lemax, w, n)

        # supernode detection
        for pk in range(pk1, pk2):
            i = Ci[pk]
            if nv[i] >= 0:
                continue
            h = last[i]
            i = hhead[h]
            hhead[h] = -1
            while i != -1 and nxt[i] != -1:
                ln = ln_[i]
                eln = elen[i]
                for p in range(Cp[i] + 1, Cp[i] + ln):
                    w[Ci[p]] = mark
                jlast = i
                j = nxt[i]
                while j != -1:
                    ok = ln_[j] == ln and elen[j] == eln
                    p = Cp[j] + 1
                    while ok and p <= Cp[j] + ln - 1:
                        if w[Ci[p]] != mark:
                            ok = False
                        p += 1
                    if ok:
                        Cp[j] = _flip(i)
                        nv[i] += nv[j]
                        nv[j] = 0
                        elen[j] = -1
                        j = nxt[j]
                        nxt[jlast] = j
                    else:
                        jlast = j
                        j = nxt[j]
                i = nxt[i]
                mark += 1

        # finalize new element
        p = pk1
        for pk in range(pk1, pk2):
            i = Ci[pk]
            nvi = -nv[i]
            if nvi <= 0:
                continue
            nv[i] = nvi
            d = degree[i] + dk - nvi
            d = min(d, n - nel - nvi)
            if head[d] != -1:
                last[head[d]] = i
            nxt[i] = head[d]
            last[i] = -1
            head[d] = i
            mindeg = min(mindeg, d)
            degree[i] = d
            Ci[p] = i
            p += 1
        nv[k] = nvk
        ln_[k] = p - pk1
        if ln_[k] == 0:
            Cp[k] = -1
            w[k] = 0
        if elenk != 0:
            cnz = p

    # postorder the assembly tree
    for i in range(n):
        Cp[i] = _flip(Cp[i])
    for j in range(n + 1):
        head[j] = -1
    for j in range(n, -1, -1):
        if nv[j] > 0:
            continue
        nxt[j] = head[Cp[j]]
        head[Cp[j]] = j
    for e in range(n, -1, -1):
        if nv[e] <= 0:
            continue
        if Cp[e] != -1:
            nxt[e] = head[Cp[e]]
            head[Cp[e]] = e
    k = 0
    for i in range(n + 1):
        if Cp[i] == -1:
            k = _tdfs(i, k, head, nxt, P, w)
    out = np.empty(n, dtype=np.int64)
    q = 0
    for i in range(n + 1):
        if P[i] < n:
            out[q] = P[i]
            q += 1
    return out


# --------------------------------------------------------------------- LDL^T

@jit
def _ldl_symbolic(n, indptr, indices, perm, pinv):
    parent = np.empty(n, dtype=np.int64)
    flag = np.empty(n, dtype=np.int64)
    lnz = np.zeros(n, dtype=np.int64)
    for k in range(n):
        parent[k] = -1
        flag[k] = k
        kk = perm[k]
        for p in range(indptr[kk], indptr[kk + 1]):
            i = pinv[indices[p]]
            if i < k:
                while flag[i] != k:
                    if parent[i] == -1:
                        parent[i] = k
                    lnz[i] += 1
                    flag[i] = k
                    i = parent[i]
    lp = np.zeros(n + 1, dtype=np.int64)
    for k in range(n):
        lp[k + 1] = lp[k] + lnz[k]
    return parent, lp


@jit
def _ldl_numeric(n, indptr, indices, data, perm, pinv, parent, lp, tol):
    """Returns (Li, Lx, D, bad) with ``bad = -1`` on success."""
    nnz = lp[n]
    li = np.empty(nnz, dtype=np.int64)
    lx = np.empty(nnz, dtype=np.float64)
    d = np.empty(n, dtype=np.float64)
    y = np.zeros(n, dtype=np.float64)
    pattern = np.empty(n, dtype=np.int64)
    flag = np.empty(n, dtype=np.int64)
    lnz = np.zeros(n, dtype=np.int64)
    for k in range(n):
        top = n
        flag[k] = k
        kk = perm[k]
        for p in range(indptr[kk], indptr[kk + 1]):
            i = pinv[indices[p]]
            if i <= k:
                y[i] += data[p]
                length = 0
                while flag[i] != k:
                    pattern[length] = i
                    length += 1
                    flag[i] = k
                    i = parent[i]
                while length > 0:
                    top -= 1
                    length -= 1
                    pattern[top] = pattern[length]
        dk = y[k]
        y[k] = 0.0
        while top < n:
            i = pattern[top]
            yi = y[i]
            y[i] = 0.0
            p2 = lp[i] + lnz[i]
            for p in range(lp[i], p2):
                y[li[p]] -= lx[p] * yi
            lki = yi / d[i]
            dk -= lki * yi
            li[p2] = k
            lx[p2] = lki
            lnz[i] += 1
            top += 1
        d[k] = dk
        if not (abs(dk) > tol):
            return li, lx, d, k
    return li, lx, d, -1


@jit
def _ldl_solve(n, lp, li, lx, d, perm, b):
    x = np.empty(n, dtype=np.float64)
    for k in range(n):
        x[k] = b[perm[k]]
    for j in range(n):
        xj = x[j]
        for p in range(lp[j], lp[j + 1]):
            x[li[p]] -= lx[p] * xj
    for j in range(n):
        x[j] /= d[j]
    for j in range(n - 1, -1, -1):
        s = x[j]
        for p in range(lp[j], lp[j + 1]):
            s -= lx[p] * x[li[p]]
        x[j] = s
    out = np.empty(n, dtype=np.float64)
    for k in range(n):
        out[perm[k]] = x[k]
    return out


@dataclass(frozen=True, eq=False)
class LdltFactor:
    """``A[perm][:, perm] = L D L^T`` with unit lower-triangular ``L``.

    ``L`` is stored by columns without its unit diagonal (``lp``, ``li``,
    ``lx``).
    """

    perm: np.ndarray
    lp: np.ndarray
    li: np.ndarray
    lx: np.ndarray
    d: np.ndarray

    @property
    def n(self) -> int:
        return len(self.d)

    @property
    def nnz_l(self) -> int:
        return int(self.lp[-1])

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.ndim == 2:
            return np.column_stack([self.solve(b[:, j]) for j in range(b.shape[1])])
        return _ldl_solve(self.n, self.lp, self.li, self.lx, self.d, self.perm,
                          np.ascontiguousarray(b))

    def lower(self) -> sp.csc_matrix:
        """Explicit unit lower-triangular factor as a sparse matrix."""
        n = self.n
        L = sp.csc_matrix((self.lx, self.li, self.lp), shape=(n, n))
        return (L + sp.identity(n, format="csc")).tocsc()

    def inertia(self) -> tuple[int, int]:
        """(negative, positive) pivot counts."""
        return int(np.sum(self.d < 0)), int(np.sum(self.d > 0))


def _pattern(A):
    A = sp.csr_matrix(A)
    A.sort_indices()
    return (A.shape[0], A.indptr.astype(np.int64), A.indices.astype(np.int64),
            A.data.astype(np.float64))


def amd(A) -> np.ndarray:
    """AMD permutation of the symmetric sparse matrix ``A``."""
    n, indptr, indices, _ = _pattern(A)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    return amd_order(n, indptr, indices)


def factorize(A, ordering: str = "amd", tol: float = PIVOT_TOL) -> LdltFactor:
    """LDL^T factorization of a symmetric sparse matrix.

    Parameters
    ----------
    A : sparse matrix
        Symmetric; both triangles must be stored.
    ordering : {"amd", "natural"}
    tol : float
        A pivot with ``|d| <= tol * max|diag(A)|`` is treated as breakdown.

    Raises
    ------
    SingularPivot
        If a pivot falls below the breakdown threshold.
    """
    n, indptr, indices, data = _pattern(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if ordering == "amd":
        perm = amd_order(n, indptr, indices) if n else np.empty(0, dtype=np.int64)
    elif ordering == "natural":
        perm = np.arange(n, dtype=np.int64)
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    pinv = np.empty(n, dtype=np.int64)
    pinv[perm] = np.arange(n)
    diag = np.abs(sp.csr_matrix(A).diagonal())
    scale = float(diag.max()) if n else 0.0
    parent, lp = _ldl_symbolic(n, indptr, indices, perm, pinv)
    li, lx, d, bad = _ldl_numeric(n, indptr, indices, data, perm, pinv, parent, lp, tol * scale)
    if bad >= 0:
        raise SingularPivot(int(perm[bad]), float(d[bad]))
    return LdltFactor(perm, lp, li, lx, d)
