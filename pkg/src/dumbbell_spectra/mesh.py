"""Mirror-symmetric conforming triangulations of the dumbbell.

Meshes live in the mirror frame (neck frame shifted by ``-L/2``), so the
reflection is ``x -> -x`` and mirrored coordinates are bitwise exact.  The left
half (bulk plus half the neck) is built once and reflected.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._meshgen import MIN_ANGLE_DEG, SegmentSizing, mesh_polygon, min_angles
from .errors import MeshFailure, ParseError
from .geometry import BulkDomain, DumbbellSpec, _insert_opening, require_valid

__all__ = [
    "Region",
    "Marker",
    "TriMesh",
    "generate",
    "generate_bulk",
    "refine_uniform",
    "write_mesh",
    "read_mesh",
    "rectangle_mesh",
    "structured_rectangle_mesh",
]


class Region(enum.IntEnum):
    BULK_LEFT = 0
    BULK_RIGHT = 1
    NECK = 2


class Marker(enum.IntEnum):
    BULK_BOUNDARY = 0
    NECK_TOP = 1
    NECK_BOTTOM = 2
    INTERFACE_LEFT = 3
    INTERFACE_RIGHT = 4


_MIRROR_MARKER = np.array([0, 1, 2, 4, 3])
_MIRROR_REGION = np.array([1, 0, 2])


def _edge_keys(tri: np.ndarray) -> np.ndarray:
    e = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    e.sort(axis=1)
    return e


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangle mesh with tagged regions, marked edges and a mirror permutation.

    Attributes
    ----------
    vertices : (V, 2) float array
    triangles : (T, 3) int array, counterclockwise
    edges : (E, 2) int array of marked edges (boundary and interfaces)
    markers : (E,) int array of :class:`Marker` codes
    region : (T,) int array of :class:`Region` codes
    mirror : (V,) int array or None
        Vertex permutation of the reflection; None for non-symmetric meshes.
    shift : float
        Add to x to return to neck coordinates.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    markers: np.ndarray
    region: np.ndarray
    mirror: np.ndarray | None = None
    shift: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, dt in (("vertices", float), ("triangles", np.int64), ("edges", np.int64),
                         ("markers", np.int64), ("region", np.int64)):
            arr = np.ascontiguousarray(getattr(self, name), dtype=dt)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.mirror is not None:
            m = np.ascontiguousarray(self.mirror, dtype=np.int64)
            m.setflags(write=False)
            object.__setattr__(self, "mirror", m)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices
        a, b, c = p[self.triangles[:, 0]], p[self.triangles[:, 1]], p[self.triangles[:, 2]]
        return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

    def area(self) -> float:
        return float(np.sum(self.signed_areas()))

    def all_edges(self) -> np.ndarray:
        """Unique undirected edges, sorted lexicographically."""
        return np.unique(_edge_keys(self.triangles), axis=0)

    def max_edge_length(self) -> float:
        e = self.all_edges()
        d = self.vertices[e[:, 0]] - self.vertices[e[:, 1]]
        return float(np.max(np.hypot(d[:, 0], d[:, 1])))

    def neck_coordinates(self) -> np.ndarray:
        p = np.array(self.vertices)
        p[:, 0] += self.shift
        return p

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.all_edges()) + self.n_triangles

    def problems(self) -> list[str]:
        """Every violated structural invariant; empty for a valid mesh."""
        out = []
        if np.any(self.signed_areas() <= 0):
            out.append("non-positive triangle area")
        keys, counts = np.unique(_edge_keys(self.triangles), axis=0, return_counts=True)
        if np.any(counts > 2):
            out.append("edge shared by more than two triangles")
        bnd = {tuple(e) for e in keys[counts == 1]}
        marked = {tuple(sorted(e)): int(m) for e, m in zip(self.edges, self.markers)}
        if len(marked) != len(self.edges):
            out.append("duplicate marked edge")
        interface = (Marker.INTERFACE_LEFT, Marker.INTERFACE_RIGHT)
        want_bnd = {e for e, m in marked.items() if m not in interface}
        if bnd != want_bnd:
            out.append("boundary markers do not match mesh boundary")
        inner = {tuple(e) for e in keys[counts == 2]}
        if any(e not in inner for e, m in marked.items() if m in interface):
            out.append("interface edge is not interior")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.triangles.ravel()] = True
        if not used.all():
            out.append("unreferenced vertex")
        if self.mirror is not None:
            out += self._mirror_problems()
        return out

    def _mirror_problems(self) -> list[str]:
        out = []
        m = self.mirror
        if len(m) != self.n_vertices or not np.array_equal(np.sort(m), np.arange(self.n_vertices)):
            return ["mirror is not a permutation"]
        if not np.array_equal(m[m], np.arange(self.n_vertices)):
            out.append("mirror is not an involution")
        p = self.vertices
        if not (np.array_equal(p[m, 0], -p[:, 0]) and np.array_equal(p[m, 1], p[:, 1])):
            out.append("mirror coordinates are not exact reflections")
        tri = np.sort(self.triangles, axis=1)
        img = np.sort(m[self.triangles], axis=1)
        order_a = np.lexsort(tri.T[::-1])
        order_b = np.lexsort(img.T[::-1])
        if not np.array_equal(tri[order_a], img[order_b]):
            out.append("mirror does not map triangles to triangles")
        elif not np.array_equal(self.region[order_a], _MIRROR_REGION[self.region[order_b]]):
            out.append("mirror does not preserve regions")
        e = np.sort(self.edges, axis=1)
        ei = np.sort(m[self.edges], axis=1)
        oa, ob = np.lexsort(e.T[::-1]), np.lexsort(ei.T[::-1])
        if not np.array_equal(e[oa], ei[ob]):
            out.append("mirror does not map marked edges to marked edges")
        elif not np.array_equal(self.markers[oa], _MIRROR_MARKER[self.markers[ob]]):
            out.append("mirror does not preserve markers")
        return out

    def equals(self, other: "TriMesh") -> bool:
        """Structural equality, including mirror and exact coordinates."""
        same = (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.markers, other.markers)
            and np.array_equal(self.region, other.region)
        )
        if not same:
            return False
        if (self.mirror is None) != (other.mirror is None):
            return False
        return self.mirror is None or np.array_equal(self.mirror, other.mirror)


def _rows(top: float, layers: int) -> np.ndarray:
    # shared by bulk opening and neck column so the glue is bitwise exact
    r = top * np.arange(layers + 1) / layers
    r[-1] = top  # top * n / n can round away from top
    return r


def _neck_columns(spec: DumbbellSpec, h: float) -> int:
    base = len(spec.neck.samples) - 1
    mult = max(1, math.ceil(spec.length / (base * h)))
    if (base * mult) % 2:
        mult += 1
    return base * mult


def generate_bulk(bulk: BulkDomain, h_bulk: float, opening: float = 0.0, layers: int = 2,
                  grade: float = 0.3, seed: int = 0):
    """Triangulate a single bulk polygon in neck coordinates.

    When ``opening > 0`` the flat segment through the attachment point gets
    vertices at ``opening * i / layers`` for ``i = 0..layers`` and the mesh is
    graded toward it.

    Returns
    -------
    points, triangles, segments, opening_index
        ``opening_index`` lists the indices of the opening vertices from
        bottom to top (empty when ``opening == 0``).
    """
    poly = bulk.neck_frame_vertices()
    if opening > 0.0:
        poly = _insert_opening(poly, opening)
        rows = _rows(opening, layers)
        sizing = SegmentSizing(h_bulk, opening / layers, (0.0, 0.0), (0.0, opening), grade)
        forced = {len(poly) - 1: np.column_stack([np.zeros(layers - 1), rows[1:-1]])}
    else:
        sizing = SegmentSizing(h_bulk)
        forced = {}
    p, t, seg = mesh_polygon(poly, sizing, forced, seed=seed)
    if opening > 0.0:
        # boundary order: (0, top) first ... (0, 0) then the forced interior rows
        nb = len(seg)
        idx = np.concatenate([[nb - layers], np.arange(nb - layers + 1, nb), [0]])
        if not (np.array_equal(p[idx, 1], rows) and np.all(p[idx, 0] == 0.0)):
            raise MeshFailure("opening vertices were not placed exactly")
        return p, t, seg, idx
    return p, t, seg, np.empty(0, dtype=np.int64)


def _check_quality(p, t, label):
    worst = float(min_angles(p, t).min())
    if worst < MIN_ANGLE_DEG:
        raise MeshFailure(f"{label} minimum angle {worst:.1f} deg is below {MIN_ANGLE_DEG:g} deg")
    return worst


def generate(spec: DumbbellSpec, h_bulk: float, neck_layers: int, seed: int = 0) -> TriMesh:
    """Mesh the dumbbell by building its left half and reflecting it.

    Parameters
    ----------
    spec : DumbbellSpec
    h_bulk : float
        Target edge length in the bulks; also bounds the neck column spacing.
    neck_layers : int
        Number of cells across the neck (at least 2).
    seed : int
        Seed of the interior point sampler.
    """
    require_valid(spec)
    if not (h_bulk > 0 and np.isfinite(h_bulk)):
        raise MeshFailure("h_bulk must be positive")
    if int(neck_layers) != neck_layers or neck_layers < 2:
        raise MeshFailure("neck_layers must be an integer >= 2")
    layers = int(neck_layers)
    top0 = spec.opening()
    half = spec.axis

    bp, bt, bseg, open_idx = generate_bulk(spec.left, h_bulk, top0, layers, seed=seed)
    bulk_angle = _check_quality(bp, bt, "bulk")
    bp = bp.copy()
    bp[:, 0] -= half  # opening x = -L/2 exactly

    nx = _neck_columns(spec, h_bulk)
    m = nx // 2
    s = -half * (m - np.arange(m + 1)) / m + 0.0
    gcol = spec.neck(s + half)
    gcol[0] = spec.neck.samples[0]
    nb = len(bp)
    # neck vertex (i, j) for i >= 1 lives at nb + (i-1)*(layers+1) + j
    nid = np.empty((m + 1, layers + 1), dtype=np.int64)
    nid[0] = open_idx
    nid[1:] = nb + np.arange(m * (layers + 1)).reshape(m, layers + 1)
    npts = np.empty((m * (layers + 1), 2))
    for i in range(1, m + 1):
        rows = _rows(spec.epsilon * gcol[i], layers)
        blk = slice((i - 1) * (layers + 1), i * (layers + 1))
        npts[blk, 0] = s[i]
        npts[blk, 1] = rows
    half_pts = np.vstack([bp, npts])
    nh = len(half_pts)

    v00 = nid[:-1, :-1].ravel()
    v10 = nid[1:, :-1].ravel()
    v11 = nid[1:, 1:].ravel()
    v01 = nid[:-1, 1:].ravel()
    ntri = np.vstack([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    half_tri = np.vstack([bt, ntri])
    half_reg = np.concatenate([np.full(len(bt), Region.BULK_LEFT), np.full(len(ntri), Region.NECK)])

    open_set = {tuple(sorted(e)) for e in zip(open_idx[:-1], open_idx[1:])}
    bmask = np.array([tuple(sorted(e)) not in open_set for e in bseg])
    e_bulk = bseg[bmask]
    e_int = np.column_stack([open_idx[:-1], open_idx[1:]])
    e_bot = np.column_stack([nid[:-1, 0], nid[1:, 0]])
    e_top = np.column_stack([nid[:-1, -1], nid[1:, -1]])
    half_edges = np.vstack([e_bulk, e_int, e_bot, e_top])
    half_mark = np.concatenate([
        np.full(len(e_bulk), Marker.BULK_BOUNDARY), np.full(len(e_int), Marker.INTERFACE_LEFT),
        np.full(len(e_bot), Marker.NECK_BOTTOM), np.full(len(e_top), Marker.NECK_TOP)])

    # reflect everything except the axis column
    axis = nid[m]
    on_axis = np.zeros(nh, dtype=bool)
    on_axis[axis] = True
    off = np.flatnonzero(~on_axis)
    image = np.arange(nh)
    image[off] = nh + np.arange(len(off))
    right_pts = half_pts[off] * np.array([-1.0, 1.0])
    verts = np.vstack([half_pts, right_pts])
    mirror = np.concatenate([image, off])

    right_tri = image[half_tri][:, [0, 2, 1]]
    tris = np.vstack([half_tri, right_tri])
    region = np.concatenate([half_reg, _MIRROR_REGION[half_reg]])
    edges = np.vstack([half_edges, image[half_edges][:, ::-1]])
    markers = np.concatenate([half_mark, _MIRROR_MARKER[half_mark]])

    info = {"h_bulk": float(h_bulk), "neck_layers": layers, "neck_columns": int(nx),
            "epsilon": float(spec.epsilon), "min_bulk_angle": bulk_angle, "seed": int(seed)}
    return TriMesh(verts, tris, edges, markers, region, mirror, half, info)


def rectangle_mesh(width: float, height: float, h: float, seed: int = 0) -> TriMesh:
    """Mesh of ``[0, width] x [0, height]`` (one bulk region, no mirror)."""
    bulk = BulkDomain.rectangle(width, height)
    p, t, seg, _ = generate_bulk(bulk, h, seed=seed)
    _check_quality(p, t, "bulk")
    p = p + bulk.attachment  # back to the rectangle's own frame
    p[np.abs(p) < 1e-15] = 0.0
    return TriMesh(p, t, seg, np.zeros(len(seg)), np.zeros(len(t)), None, 0.0,
                   {"h_bulk": float(h), "seed": int(seed)})


def structured_rectangle_mesh(width: float, height: float, nx: int, ny: int) -> TriMesh:
    """Grid mesh of ``[0, width] x [0, height]`` with ``nx * ny`` cells, each
    split along its rising diagonal.  Grid lines include ``x = i width / nx``
    and ``y = j height / ny`` exactly, which places vertices on the nodal
    lines of suitably chosen rectangle modes."""
    xs = width * np.arange(nx + 1) / nx
    ys = height * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    p = np.column_stack([X.ravel(), Y.ravel()])
    vid = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    v00, v10 = vid[:-1, :-1].ravel(), vid[1:, :-1].ravel()
    v11, v01 = vid[1:, 1:].ravel(), vid[:-1, 1:].ravel()
    t = np.vstack([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    ring = np.concatenate([vid[:, 0], vid[-1, 1:], vid[-2::-1, -1], vid[0, -2:0:-1]])
    seg = np.column_stack([ring, np.roll(ring, -1)])
    return TriMesh(p, t, seg, np.zeros(len(seg)), np.zeros(len(t)), None, 0.0,
                   {"nx": int(nx), "ny": int(ny)})


def refine_uniform(mesh: TriMesh) -> TriMesh:
    """Split every triangle into four through its edge midpoints."""
    p = mesh.vertices
    t = mesh.triangles
    nv = len(p)
    edges = mesh.all_edges()
    mids = 0.5 * (p[edges[:, 0]] + p[edges[:, 1]])
    key = edges[:, 0] * nv + edges[:, 1]

    def mid_index(a, b):
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        return nv + np.searchsorted(key, lo * nv + hi)

    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    ab, bc, ca = mid_index(a, b), mid_index(b, c), mid_index(c, a)
    tris = np.vstack([
        np.column_stack([a, ab, ca]), np.column_stack([ab, b, bc]),
        np.column_stack([ca, bc, c]), np.column_stack([ab, bc, ca])])
    region = np.tile(mesh.region, 4)
    e0, e1 = mesh.edges[:, 0], mesh.edges[:, 1]
    em = mid_index(e0, e1)
    new_edges = np.vstack([np.column_stack([e0, em]), np.column_stack([em, e1])])
    new_markers = np.tile(mesh.markers, 2)
    mirror = None
    if mesh.mirror is not None:
        mm = mesh.mirror
        mirror = np.concatenate([mm, mid_index(mm[edges[:, 0]], mm[edges[:, 1]])])
    info = dict(mesh.info)
    info["refinements"] = int(info.get("refinements", 0)) + 1
    return TriMesh(np.vstack([p, mids]), tris, new_edges, new_markers, region, mirror, mesh.shift, info)


# ---------------------------------------------------------------- file format

def write_mesh(mesh: TriMesh, path) -> None:
    """Write the plain-text ``dbmesh 1`` format (coordinates round-trip exactly)."""
    lines = ["dbmesh 1", f"{mesh.n_vertices} {len(mesh.edges)} {mesh.n_triangles}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"{i} {j} {k} {r}" for (i, j, k), r in zip(mesh.triangles.tolist(), mesh.region.tolist())]
    lines += [f"{i} {j} {m}" for (i, j), m in zip(mesh.edges.tolist(), mesh.markers.tolist())]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _find_mirror(p: np.ndarray) -> np.ndarray | None:
    order = np.lexsort((p[:, 1], p[:, 0]))
    refl = p * np.array([-1.0, 1.0]) + 0.0
    order_r = np.lexsort((refl[:, 1], refl[:, 0]))
    if not np.array_equal(p[order] + 0.0, refl[order_r]):
        return None
    mirror = np.empty(len(p), dtype=np.int64)
    mirror[order_r] = order
    return mirror


def read_mesh(path, shift: float | None = None) -> TriMesh:
    """Read a ``dbmesh 1`` file; the mirror map is recovered from coordinates.

    Raises
    ------
    ParseError
        With the 1-based line number of the first malformed line.
    """
    with open(path, encoding="ascii", errors="replace") as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != "dbmesh 1":
        raise ParseError("missing 'dbmesh 1' header", 1)
    try:
        nv, ne, nt = (int(s) for s in raw[1].split())
    except (IndexError, ValueError):
        raise ParseError("second line must hold three integers 'V E T'", 2) from None
    if min(nv, ne, nt) < 0:
        raise ParseError("negative count in header", 2)
    body = raw[2:]
    if len([b for b in body if b.strip()]) != nv + ne + nt or len(body) < nv + ne + nt:
        raise ParseError(f"header declares {nv + ne + nt} body lines, found {len(body)}",
                         min(len(raw), 3 + nv + ne + nt))

    def fields(lineno, n, conv):
        parts = raw[lineno - 1].split()
        if len(parts) != n:
            raise ParseError(f"expected {n} fields", lineno)
        try:
            return [conv(s) for s in parts]
        except ValueError:
            raise ParseError("malformed number", lineno) from None

    verts = np.empty((nv, 2))
    for i in range(nv):
        verts[i] = fields(3 + i, 2, float)
    if not np.all(np.isfinite(verts)):
        raise ParseError("non-finite coordinate", 3 + int(np.argmax(~np.isfinite(verts).all(axis=1))))
    tris = np.empty((nt, 3), dtype=np.int64)
    region = np.empty(nt, dtype=np.int64)
    for i in range(nt):
        ln = 3 + nv + i
        a, b, c, r = fields(ln, 4, int)
        if not all(0 <= v < nv for v in (a, b, c)) or len({a, b, c}) < 3:
            raise ParseError(f"triangle index out of range or repeated: {a} {b} {c}", ln)
        if r not in (0, 1, 2):
            raise ParseError(f"unknown region code {r}", ln)
        tris[i] = (a, b, c)
        region[i] = r
    edges = np.empty((ne, 2), dtype=np.int64)
    markers = np.empty(ne, dtype=np.int64)
    for i in range(ne):
        ln = 3 + nv + nt + i
        a, b, mk = fields(ln, 3, int)
        if not (0 <= a < nv and 0 <= b < nv) or a == b:
            raise ParseError(f"edge index out of range: {a} {b}", ln)
        if mk not in range(5):
            raise ParseError(f"unknown marker code {mk}", ln)
        edges[i] = (a, b)
        markers[i] = mk
    mirror = _find_mirror(verts)
    if shift is None:
        shift = 0.0
    return TriMesh(verts, tris, edges, markers, region, mirror, shift)
