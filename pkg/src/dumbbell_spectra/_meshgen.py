"""Graded unstructured triangulation of a simple polygon.

The boundary is sampled once according to a sizing field and then held fixed;
interior points are seeded on hexagonal lattices (one per size octave), relaxed
with the bar-spring smoothing of Persson and Strang, and connected by
Delaunay triangulation.  Output is deterministic for a given seed.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from .errors import MeshFailure
from .geometry import points_in_polygon

MIN_ANGLE_DEG = 20.0


class SegmentSizing:
    """``h(p) = min(h_max, h_min + grade * dist(p, segment))``."""

    def __init__(self, h_max, h_min=None, a=(0.0, 0.0), b=(0.0, 0.0), grade=0.3):
        self.h_max = float(h_max)
        self.h_min = float(h_max if h_min is None else min(h_min, h_max))
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.grade = float(grade)

    def distance(self, p):
        p = np.atleast_2d(p)
        ab = self.b - self.a
        denom = float(ab @ ab)
        if denom == 0.0:
            t = np.zeros(len(p))
        else:
            t = np.clip((p - self.a) @ ab / denom, 0.0, 1.0)
        proj = self.a + t[:, None] * ab
        return np.hypot(p[:, 0] - proj[:, 0], p[:, 1] - proj[:, 1])

    def __call__(self, p):
        return np.minimum(self.h_max, self.h_min + self.grade * self.distance(p))

    def region_below(self, level):
        """Bounding box of ``{h < level}`` or None if empty/everything."""
        if level > self.h_max:
            return None
        r = (level - self.h_min) / self.grade
        if r <= 0:
            return np.array([np.inf, np.inf, -np.inf, -np.inf])
        lo = np.minimum(self.a, self.b) - r
        hi = np.maximum(self.a, self.b) + r
        return np.array([lo[0], lo[1], hi[0], hi[1]])


def sample_edge(a, b, sizing, n_probe=400):
    """Interior points on segment ``a -> b`` spaced by the sizing field."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.hypot(*(b - a)))
    t = np.linspace(0.0, 1.0, n_probe + 1)
    h = sizing(a + t[:, None] * (b - a))
    inv = 1.0 / h
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(t) * length)])
    nseg = max(1, int(np.round(cum[-1])))
    if nseg == 1:
        return np.empty((0, 2))
    targets = cum[-1] * np.arange(1, nseg) / nseg
    ts = np.interp(targets, cum, t)
    return a + ts[:, None] * (b - a)


def _hex_lattice(box, s):
    x0, y0, x1, y1 = box
    dy = s * np.sqrt(3.0) / 2.0
    ny = int(np.floor((y1 - y0) / dy)) + 1
    nx = int(np.floor((x1 - x0) / s)) + 2
    if nx * ny > 5_000_000:
        raise MeshFailure("interior seeding lattice too large; increase h_bulk")
    jj, ii = np.mgrid[0:ny, 0:nx]
    xs = x0 + s * (ii + 0.5 * (jj % 2))
    ys = y0 + dy * jj
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    return pts[(pts[:, 0] <= x1) & (pts[:, 1] <= y1)]


def _dist_to_boundary(p, poly):
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a
    best = np.full(len(p), np.inf)
    for k in range(len(a)):
        d = ab[k]
        denom = float(d @ d)
        t = np.clip((p - a[k]) @ d / denom, 0.0, 1.0)
        q = a[k] + t[:, None] * d
        best = np.minimum(best, np.hypot(p[:, 0] - q[:, 0], p[:, 1] - q[:, 1]))
    return best


def seed_interior(poly, sizing, rng):
    """Graded interior seed points, one hexagonal lattice per size octave."""
    bx = np.array([poly[:, 0].min(), poly[:, 1].min(), poly[:, 0].max(), poly[:, 1].max()])
    chunks = []
    s = sizing.h_max
    hi = np.inf
    while True:
        region = sizing.region_below(hi) if np.isfinite(hi) else None
        box = bx.copy()
        if region is not None:
            box[:2] = np.maximum(box[:2], region[:2])
            box[2:] = np.minimum(box[2:], region[2:])
        if box[2] > box[0] and box[3] > box[1]:
            cand = _hex_lattice(box, s)
            if len(cand):
                h = sizing(cand)
                last = s / 2 < sizing.h_min
                keep = (h < hi) & ((h >= s) | last)
                cand, h = cand[keep], h[keep]
                accept = rng.random(len(cand)) < (s / np.maximum(h, s)) ** 2
                chunks.append(cand[accept])
        if s / 2 < sizing.h_min * 0.999:
            break
        hi = s
        s = s / 2
    pts = np.vstack(chunks) if chunks else np.empty((0, 2))
    if len(pts) == 0:
        return pts
    inside = points_in_polygon(pts, poly)
    pts = pts[inside]
    clearance = _dist_to_boundary(pts, poly)
    return pts[clearance > 0.45 * sizing(pts)]


def _triangulate(p, poly):
    tri = Delaunay(p)
    t = tri.simplices
    cent = p[t].mean(axis=1)
    t = t[points_in_polygon(cent, poly)]
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    t = t[np.abs(area) > 1e-14 * np.max(np.abs(area))]
    area = area[np.abs(area) > 1e-14 * np.max(np.abs(area))]
    flip = area < 0
    t[flip] = t[flip][:, [0, 2, 1]]
    return t


def _bars(t):
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def min_angles(p, t):
    """Smallest interior angle of each triangle, in degrees."""
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    la = np.hypot(*(b - c).T)
    lb = np.hypot(*(c - a).T)
    lc = np.hypot(*(a - b).T)

    def ang(opp, s1, s2):
        return np.degrees(np.arccos(np.clip((s1**2 + s2**2 - opp**2) / (2 * s1 * s2), -1, 1)))

    return np.minimum(np.minimum(ang(la, lb, lc), ang(lb, lc, la)), ang(lc, la, lb))


def _relax(p, nfix, poly, sizing, iters, fscale=1.2, deltat=0.2, ttol=0.1, dptol=1e-3):
    pold = np.full_like(p, np.inf)
    hp = sizing(p)
    bars = None
    for _ in range(iters):
        if bars is None or np.max(np.hypot(*(p - pold).T) / hp) > ttol:
            pold = p.copy()
            bars = _bars(_triangulate(p, poly))
            hp = sizing(p)
        vec = p[bars[:, 0]] - p[bars[:, 1]]
        length = np.hypot(vec[:, 0], vec[:, 1])
        hbar = sizing(0.5 * (p[bars[:, 0]] + p[bars[:, 1]]))
        l0 = hbar * fscale * np.sqrt(np.sum(length**2) / np.sum(hbar**2))
        force = np.maximum(l0 - length, 0.0) / length
        fvec = force[:, None] * vec
        ftot = np.zeros_like(p)
        np.add.at(ftot, bars[:, 0], fvec)
        np.add.at(ftot, bars[:, 1], -fvec)
        ftot[:nfix] = 0.0
        step = deltat * ftot
        trial = p[nfix:] + step[nfix:]
        ok = points_in_polygon(trial, poly)
        step[nfix:][~ok] = 0.0
        p = p + step
        if np.max(np.hypot(*step[nfix:].T) / hp[nfix:], initial=0.0) < dptol:
            break
    return p


def _drop_encroaching(p, nfix, seg):
    """Remove free points inside the diametral circle of a boundary segment."""
    free = p[nfix:]
    if len(free) == 0:
        return p
    mid = 0.5 * (p[seg[:, 0]] + p[seg[:, 1]])
    rad = 0.5 * np.hypot(*(p[seg[:, 0]] - p[seg[:, 1]]).T)
    bad = np.zeros(len(free), dtype=bool)
    for k in range(len(seg)):
        d = np.hypot(free[:, 0] - mid[k, 0], free[:, 1] - mid[k, 1])
        bad |= d < rad[k] * 1.0001
    return np.vstack([p[:nfix], free[~bad]])


def mesh_polygon(poly, sizing, forced=None, seed=0, iters=300):
    """Triangulate a counterclockwise simple polygon.

    Parameters
    ----------
    poly : (n, 2) array
        Polygon vertices; all become mesh vertices.
    sizing : callable
        Target edge length field; must expose ``h_max``, ``h_min`` and
        ``region_below`` like :class:`SegmentSizing`.
    forced : dict, optional
        ``{edge_index: (k, 2) array}`` of exact interior points for an edge
        ``poly[i] -> poly[i+1]``, used instead of sizing-based sampling.

    Returns
    -------
    points, triangles, segments
        ``segments`` lists boundary edges as index pairs in counterclockwise
        order; boundary points come first in ``points``.
    """
    poly = np.asarray(poly, dtype=float)
    forced = forced or {}
    n = len(poly)
    bpts = []
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        bpts.append(a[None, :])
        if i in forced:
            bpts.append(np.asarray(forced[i], dtype=float).reshape(-1, 2))
        else:
            bpts.append(sample_edge(a, b, sizing))
    pfix = np.vstack(bpts)
    nfix = len(pfix)
    seg = np.column_stack([np.arange(nfix), (np.arange(nfix) + 1) % nfix])

    rng = np.random.default_rng(seed)
    pint = seed_interior(poly, sizing, rng)
    p = np.vstack([pfix, pint])
    if len(pint):
        p = _relax(p, nfix, poly, sizing, iters)
        p = _drop_encroaching(p, nfix, seg)
    t = _triangulate(p, poly)

    used = np.zeros(len(p), dtype=bool)
    used[t.ravel()] = True
    if not used[:nfix].all():
        raise MeshFailure("boundary sample dropped from triangulation")
    remap = -np.ones(len(p), dtype=np.int64)
    remap[used] = np.arange(used.sum())
    p, t = p[used], remap[t]

    edges = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, counts = np.unique(key, axis=0, return_counts=True)
    open_edges = {tuple(e) for e in uniq[counts == 1]}
    want = {tuple(sorted(s)) for s in seg}
    if open_edges != want:
        missing = len(want - open_edges)
        raise MeshFailure(f"triangulation does not conform to the boundary ({missing} segments missing)")
    if np.any(counts > 2):
        raise MeshFailure("non-manifold edge in triangulation")
    return p, t, seg
