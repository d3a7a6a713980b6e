"""Nodal domains of P1 fields, eigenvalue indices and nodal deficiency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import jit
from .errors import AllBelowThreshold
from .fem import FeField, lumped_vertex_area
from .mesh import TriMesh, refine_uniform

DEFAULT_THRESHOLD = 1e-8
UNLABELED = -1


@jit
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@jit
def _sign_components(edges, sign):
    """Union-find over edges joining vertices of equal nonzero sign.

    Returns per-vertex component ids numbered 0.. in order of first vertex,
    or -1 for vertices with sign 0.
    """
    n = sign.shape[0]
    parent = np.arange(n)
    rank = np.zeros(n, dtype=np.int64)
    for e in range(edges.shape[0]):
        a = edges[e, 0]
        b = edges[e, 1]
        if sign[a] == 0 or sign[a] != sign[b]:
            continue
        ra = _find(parent, a)
        rb = _find(parent, b)
        if ra == rb:
            continue
        if rank[ra] < rank[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        if rank[ra] == rank[rb]:
            rank[ra] += 1
    label = np.full(n, -1, dtype=np.int64)
    root_id = np.full(n, -1, dtype=np.int64)
    count = 0
    for i in range(n):
        if sign[i] == 0:
            continue
        r = _find(parent, i)
        if root_id[r] == -1:
            root_id[r] = count
            count += 1
        label[i] = root_id[r]
    return label, count


@dataclass(frozen=True, eq=False)
class NodalPartition:
    """Sign components of a field; ``labels[i] == -1`` marks near-zero vertices."""

    labels: np.ndarray
    count: int
    signs: np.ndarray
    areas: np.ndarray
    threshold: float


def count_nodal_domains(u: FeField, rel_threshold: float = DEFAULT_THRESHOLD) -> NodalPartition:
    """Connected same-sign vertex clusters of ``u``.

    Vertices with ``|u_i| <= rel_threshold * max|u|`` are left unlabeled and
    never bridge components.

    Raises
    ------
    AllBelowThreshold
        If no vertex clears the threshold.
    """
    vals = u.values
    peak = float(np.max(np.abs(vals))) if len(vals) else 0.0
    cut = rel_threshold * peak
    sign = np.where(vals > cut, 1, np.where(vals < -cut, -1, 0)).astype(np.int64)
    if peak == 0.0 or not np.any(sign):
        raise AllBelowThreshold("every vertex lies below the zero threshold")
    edges = u.mesh.all_edges()
    labels, count = _sign_components(np.ascontiguousarray(edges), sign)
    count = int(count)
    area_v = lumped_vertex_area(u.mesh)
    lab = labels >= 0
    areas = np.bincount(labels[lab], weights=area_v[lab], minlength=count)
    signs = np.zeros(count, dtype=np.int64)
    signs[labels[lab]] = sign[lab]
    return NodalPartition(labels, count, signs, areas, float(rel_threshold))


def prolong(u: FeField, fine: TriMesh | None = None) -> FeField:
    """P1 interpolation of ``u`` onto its uniform refinement."""
    fine = refine_uniform(u.mesh) if fine is None else fine
    e = u.mesh.all_edges()
    vals = np.concatenate([u.values, 0.5 * (u.values[e[:, 0]] + u.values[e[:, 1]])])
    return FeField(fine, vals)


def stability_check(u: FeField, fine: FeField | None = None,
                    rel_threshold: float = DEFAULT_THRESHOLD) -> dict:
    """Count on the field and on a finer representation of it.

    ``fine`` should be the same eigenfunction re-solved on the refined mesh;
    without it the coarse field is interpolated, which only checks the
    counting itself.
    """
    if fine is None:
        fine = prolong(u)
    c1 = count_nodal_domains(u, rel_threshold).count
    c2 = count_nodal_domains(fine, rel_threshold).count
    return {"count": c1, "count_refined": c2, "stable": c1 == c2}


def eigen_index(lambdas, j: int, cluster_tol: float = 1e-9) -> int:
    """1-based ``min{i : lambda_i = lambda_j}`` with relative clustering.

    Walks back from position ``j`` while consecutive values differ by at most
    ``cluster_tol * max(1, |lambda|)``.
    """
    lam = np.asarray(lambdas, dtype=float)
    i = j - 1
    while i > 0 and abs(lam[i] - lam[i - 1]) <= cluster_tol * max(1.0, abs(lam[i])):
        i -= 1
    return i + 1


@dataclass(frozen=True)
class DeficiencyRecord:
    index: int
    count: int
    deficiency: int
    courant_sharp: bool
    stable: bool = True

    @property
    def negative(self) -> bool:
        """Courant's bound violated: a discretization failure, never clamped."""
        return self.deficiency < 0

    def as_dict(self) -> dict:
        return {"index": self.index, "count": self.count, "deficiency": self.deficiency,
                "courant_sharp": self.courant_sharp, "stable": self.stable,
                "negative_deficiency": self.negative}


def deficiency(indices, partitions, stable=None) -> list[DeficiencyRecord]:
    """Records ``index - count`` for matching lists of indices and partitions."""
    indices = list(indices)
    partitions = list(partitions)
    if len(indices) != len(partitions):
        raise ValueError("indices and partitions must have equal length")
    stable = [True] * len(indices) if stable is None else list(stable)
    out = []
    for idx, part, st in zip(indices, partitions, stable):
        c = part.count if isinstance(part, NodalPartition) else int(part)
        d = int(idx) - c
        out.append(DeficiencyRecord(int(idx), c, d, d == 0, bool(st)))
    return out
