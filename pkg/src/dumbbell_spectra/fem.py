"""Linear finite elements for the Neumann Laplacian on a :class:`TriMesh`.

Matrices are returned as ``scipy.sparse.csr_matrix`` holding the full
symmetric pattern.  The element mass matrix is the consistent one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NonFinite
from .mesh import Region, TriMesh

DROP_TOL = 1e-14
_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


@dataclass(frozen=True, eq=False)
class FeField:
    """Per-vertex coefficients of a P1 function on ``mesh``."""

    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if len(v) != self.mesh.n_vertices:
            raise ValueError(f"field has {len(v)} values for {self.mesh.n_vertices} vertices")
        object.__setattr__(self, "values", v)

    def __sub__(self, other):
        return FeField(self.mesh, self.values - np.asarray(getattr(other, "values", other)))

    def __neg__(self):
        return FeField(self.mesh, -self.values)


def _select(mesh: TriMesh, regions):
    if regions is None:
        return mesh.triangles
    keep = np.isin(mesh.region, [int(r) for r in regions])
    return mesh.triangles[keep]


def _gradients(p, t):
    """Barycentric gradients (T, 3, 2) and element areas (T,)."""
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    # gradient of the hat function at vertex i is rot90 of the opposite edge / 2A
    e0, e1, e2 = c - b, a - c, b - a
    grads = np.stack([np.column_stack([-e[:, 1], e[:, 0]]) for e in (e0, e1, e2)], axis=1)
    grads /= area2[:, None, None]
    return grads, 0.5 * area2


def _to_csr(t, local, n):
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    if mat.nnz:
        cut = DROP_TOL * np.max(np.abs(mat.data))
        mat.data[np.abs(mat.data) <= cut] = 0.0
        mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def element_stiffness(mesh: TriMesh, regions=None):
    t = _select(mesh, regions)
    g, area = _gradients(mesh.vertices, t)
    return t, area[:, None, None] * np.einsum("tik,tjk->tij", g, g)


def element_mass(mesh: TriMesh, regions=None):
    t = _select(mesh, regions)
    _, area = _gradients(mesh.vertices, t)
    return t, area[:, None, None] * _MASS_REF[None]


def assemble_stiffness(mesh: TriMesh, regions=None) -> sp.csr_matrix:
    """Global stiffness ``K_ij = int grad(phi_i) . grad(phi_j)``.

    ``regions`` restricts assembly to triangles with the given region tags.
    """
    t, ke = element_stiffness(mesh, regions)
    return _to_csr(t, ke, mesh.n_vertices)


def assemble_mass(mesh: TriMesh, regions=None) -> sp.csr_matrix:
    """Global consistent mass ``M_ij = int phi_i phi_j``."""
    t, me = element_mass(mesh, regions)
    return _to_csr(t, me, mesh.n_vertices)


def interpolate(mesh: TriMesh, f, frame: str = "neck") -> FeField:
    """Nodal interpolant of ``f(x, y)`` (vectorized over vertex arrays).

    ``frame="neck"`` evaluates ``f`` in neck coordinates, ``"mesh"`` in the
    mesh's own coordinates.
    """
    p = mesh.neck_coordinates() if frame == "neck" else mesh.vertices
    vals = np.broadcast_to(np.asarray(f(p[:, 0], p[:, 1]), dtype=float), (len(p),)).copy()
    if not np.all(np.isfinite(vals)):
        bad = int(np.argmax(~np.isfinite(vals)))
        raise NonFinite(f"interpolated function is not finite at vertex {bad} {tuple(p[bad])}")
    return FeField(mesh, vals)


def norms(u, regions=None) -> dict:
    """Squared L2 norm and H1 seminorm of a field over the selected regions."""
    mesh = u.mesh
    vals = u.values
    t, ke = element_stiffness(mesh, regions)
    _, me = element_mass(mesh, regions)
    ue = vals[t]
    return {
        "l2_sq": float(np.einsum("ti,tij,tj->", ue, me, ue)),
        "h1_semi_sq": float(np.einsum("ti,tij,tj->", ue, ke, ue)),
    }


BULK = (Region.BULK_LEFT, Region.BULK_RIGHT)
NECK = (Region.NECK,)


def lumped_vertex_area(mesh: TriMesh) -> np.ndarray:
    """One third of the area of every triangle, accumulated at its vertices."""
    area = mesh.signed_areas()
    out = np.zeros(mesh.n_vertices)
    np.add.at(out, mesh.triangles.ravel(), np.repeat(area / 3.0, 3))
    return out
