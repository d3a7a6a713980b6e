"""SVG rendering of a nodal partition: domain outline, sign-colored
triangles and the zero-level polylines of the P1 field."""

from __future__ import annotations

from collections import defaultdict
from xml.sax.saxutils import escape

import numpy as np

from .mesh import Marker, TriMesh
from .nodal import NodalPartition

POSITIVE = "#d6604d"
NEGATIVE = "#4393c3"
NEUTRAL = "#f0f0f0"


def _chain(segments) -> list[list]:
    """Join segments ``(a, b)`` over hashable endpoint keys into polylines.

    Returns key sequences; closed loops repeat their first key at the end.
    """
    adj = defaultdict(list)
    for i, (a, b) in enumerate(segments):
        adj[a].append((b, i))
        adj[b].append((a, i))
    used = np.zeros(len(segments), dtype=bool)
    lines = []

    def walk(start):
        line = [start]
        cur = start
        while True:
            nxt = next(((v, i) for v, i in adj[cur] if not used[i]), None)
            if nxt is None:
                return line
            used[nxt[1]] = True
            cur = nxt[0]
            line.append(cur)

    # open chains first (odd-degree ends), then loops
    for k in sorted(adj, key=lambda k: len(adj[k]) % 2 == 0):
        if any(not used[i] for _, i in adj[k]):
            lines.append(walk(k))
    return lines


def zero_crossings(mesh: TriMesh, values) -> list[np.ndarray]:
    """Polylines of the zero level set of the P1 field with nodal ``values``.

    Exact zeros are assigned to the positive side so every crossing lies in
    the open interior of an edge.
    """
    v = np.asarray(values, dtype=float)
    neg = v < 0
    p = mesh.vertices
    segs = []
    points = {}
    for tri in mesh.triangles:
        cut = []
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            if neg[a] != neg[b]:
                key = (min(a, b), max(a, b))
                if key not in points:
                    t = v[key[0]] / (v[key[0]] - v[key[1]])
                    points[key] = p[key[0]] + t * (p[key[1]] - p[key[0]])
                cut.append(key)
        if len(cut) == 2:
            segs.append((cut[0], cut[1]))
    return [np.array([points[k] for k in line]) for line in _chain(segs)]


def boundary_loops(mesh: TriMesh) -> list[np.ndarray]:
    keep = ~np.isin(mesh.markers, [Marker.INTERFACE_LEFT, Marker.INTERFACE_RIGHT])
    segs = [tuple(e) for e in mesh.edges[keep]]
    return [mesh.vertices[np.array(line)] for line in _chain(segs)]


def _pts(arr) -> str:
    return " ".join(f"{x:.6g},{y:.6g}" for x, y in arr)


def export_svg(mesh: TriMesh, partition: NodalPartition, values=None, width_px: int = 800,
               title: str | None = None) -> str:
    """SVG 1.1 document of the partition.

    Triangles are filled by the sign of their vertex-sign sum.  Zero-level
    polylines use ``values`` when given; otherwise the vertex signs from the
    partition (crossings then sit at edge midpoints).  The viewBox is the
    mesh bounding box with ``y`` pointing up.
    """
    lab = partition.labels
    vsign = np.where(lab >= 0, partition.signs[np.maximum(lab, 0)], 0).astype(float)
    vals = vsign if values is None else np.asarray(values, dtype=float)
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    w, h = hi - lo
    height_px = max(1, int(round(width_px * h / w)))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width_px}" '
        f'height="{height_px}" viewBox="{lo[0]:.6g} {-hi[1]:.6g} {w:.6g} {h:.6g}">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append('<g transform="scale(1,-1)" stroke-linejoin="round">')
    tsum = vsign[mesh.triangles].sum(axis=1)
    for name, color, sel in (("positive", POSITIVE, tsum > 0), ("negative", NEGATIVE, tsum < 0),
                             ("neutral", NEUTRAL, tsum == 0)):
        if not np.any(sel):
            continue
        out.append(f'<g class="{name}" fill="{color}" stroke="none">')
        for t in mesh.triangles[sel]:
            out.append(f'<polygon points="{_pts(mesh.vertices[t])}"/>')
        out.append("</g>")
    sw = 0.004 * max(w, h)
    for loop in boundary_loops(mesh):
        out.append(f'<polyline class="boundary" fill="none" stroke="#000000" '
                   f'stroke-width="{sw:.4g}" points="{_pts(loop)}"/>')
    for line in zero_crossings(mesh, vals):
        out.append(f'<polyline class="nodal" fill="none" stroke="#ffffff" '
                   f'stroke-width="{sw:.4g}" points="{_pts(line)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
