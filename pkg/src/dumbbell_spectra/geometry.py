"""Separated domain, neck profile and the assembled symmetric dumbbell.

Coordinates follow the neck frame: the neck occupies ``[0, L] x [0, eps*g(x)]``,
the left bulk lies in ``x <= 0`` and touches the neck along the flat segment
through ``p0 = (0, 0)``, and the right bulk is its reflection across
``x = L/2``.  Meshes use the *mirror frame*, which is the neck frame shifted by
``-L/2`` so that the reflection is exactly ``x -> -x`` in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidSpec

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class NeckProfile:
    """Thickness profile ``g`` sampled uniformly on ``[0, L]``.

    ``kind`` is ``"constant"`` or ``"pwl"``; evaluation between samples is
    linear in both cases.
    """

    samples: np.ndarray
    length: float
    kind: str = "pwl"

    def __post_init__(self):
        s = np.array(self.samples, dtype=float).reshape(-1)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "length", float(self.length))

    @classmethod
    def constant(cls, value: float = 1.0, length: float = 1.0) -> "NeckProfile":
        return cls(np.array([value, value], dtype=float), length, "constant")

    @classmethod
    def piecewise_linear(cls, samples, length: float = 1.0) -> "NeckProfile":
        return cls(np.asarray(samples, dtype=float), length, "pwl")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, len(self.samples))

    def __call__(self, x):
        return np.interp(x, self.nodes, self.samples)

    def integral(self) -> float:
        """Exact integral of the piecewise-linear interpolant."""
        h = self.length / (len(self.samples) - 1)
        s = self.samples
        return float(h * (s.sum() - 0.5 * (s[0] + s[-1])))

    def violations(self) -> list[str]:
        out = []
        s = self.samples
        if len(s) < 2:
            out.append("g needs at least 2 samples")
            return out
        if not np.all(np.isfinite(s)):
            out.append("g samples must be finite")
            return out
        if not self.length > 0:
            out.append("neck length L must be positive")
        if np.any(s <= 0.0):
            out.append("g must be strictly positive")
        if np.max(s) > 1.0:
            out.append("g must not exceed 1")
        if np.max(np.abs(s - s[::-1])) > SYMMETRY_TOL:
            out.append("g must be symmetric, g(x) = g(L - x)")
        return out


def polygon_area(poly) -> float:
    """Signed shoelace area (positive for counterclockwise)."""
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return 0 if abs(v) < 1e-15 else (1 if v > 0 else -1)

    o1, o2, o3, o4 = orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True

    def on_seg(p, q, r):
        return min(p[0], q[0]) - 1e-15 <= r[0] <= max(p[0], q[0]) + 1e-15 and min(
            p[1], q[1]
        ) - 1e-15 <= r[1] <= max(p[1], q[1]) + 1e-15

    return (
        (o1 == 0 and on_seg(a, b, c))
        or (o2 == 0 and on_seg(a, b, d))
        or (o3 == 0 and on_seg(c, d, a))
        or (o4 == 0 and on_seg(c, d, b))
    )


def is_simple_polygon(poly) -> bool:
    p = np.asarray(poly, dtype=float)
    n = len(p)
    if n < 3:
        return False
    for i in range(n):
        a, b = p[i], p[(i + 1) % n]
        if np.allclose(a, b):
            return False
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_cross(a, b, p[j], p[(j + 1) % n]):
                return False
    return True


def points_in_polygon(points, poly) -> np.ndarray:
    """Even-odd ray casting, vectorised over ``points``."""
    pts = np.asarray(points, dtype=float)
    p = np.asarray(poly, dtype=float)
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x0, y0 = p[:, 0][None, :], p[:, 1][None, :]
    x1, y1 = np.roll(p[:, 0], -1)[None, :], np.roll(p[:, 1], -1)[None, :]
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (x < xc)
    return (np.count_nonzero(hits, axis=1) % 2) == 1


@dataclass(frozen=True)
class BulkDomain:
    """One end of the dumbbell, described in its own frame.

    ``vertices`` is a counterclockwise simple polygon, ``attachment`` the point
    ``p0`` where the neck's lower edge meets the boundary, and
    ``flat_halfwidth`` the half-length ``ell`` of the vertical boundary segment
    centred at ``p0``.  The bulk must lie to the left of that segment.
    """

    kind: str
    vertices: np.ndarray
    attachment: tuple
    flat_halfwidth: float
    width: float | None = None
    height: float | None = None

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "attachment", (float(self.attachment[0]), float(self.attachment[1])))

    @classmethod
    def rectangle(cls, width: float, height: float = 1.0, offset: float | None = None,
                  ell: float = 0.25) -> "BulkDomain":
        """Rectangle ``[0, M] x [0, H]`` attached mid-edge on its right side by default."""
        if offset is None:
            offset = 0.5 * height
        verts = [(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)]
        return cls("rectangle", verts, (width, offset), ell, width, height)

    @classmethod
    def polygon(cls, vertices, attachment, ell: float) -> "BulkDomain":
        return cls("polygon", vertices, attachment, ell)

    def area(self) -> float:
        return polygon_area(self.vertices)

    def neck_frame_vertices(self) -> np.ndarray:
        """Polygon translated so that ``p0`` sits at the origin."""
        return self.vertices - np.asarray(self.attachment)

    def violations(self) -> list[str]:
        out = []
        v = self.vertices
        if not np.all(np.isfinite(v)):
            return ["bulk vertices must be finite"]
        if self.kind == "rectangle" and not (self.width > 0 and self.height > 0):
            return ["rectangle width and height must be positive"]
        if not self.flat_halfwidth > 0:
            out.append("flat segment half-length ell must be positive")
        if polygon_area(v) <= 0:
            out.append("bulk polygon must be counterclockwise with positive area")
        if not is_simple_polygon(v):
            out.append("bulk polygon must be simple")
        if out:
            return out
        x0, y0 = self.attachment
        if np.max(v[:, 0]) > x0 + 1e-12:
            out.append("bulk must lie to the left of the attachment segment")
        lo, hi = y0 - self.flat_halfwidth, y0 + self.flat_halfwidth
        found = False
        n = len(v)
        for i in range(n):
            a, b = v[i], v[(i + 1) % n]
            if abs(a[0] - x0) < 1e-12 and abs(b[0] - x0) < 1e-12 and b[1] > a[1]:
                if a[1] <= lo + 1e-12 and b[1] >= hi - 1e-12:
                    found = True
        if not found:
            out.append(
                f"boundary has no vertical segment of half-length {self.flat_halfwidth:g} "
                f"centred at the attachment point"
            )
        return out


class Reflection:
    """Reflection ``(x, y) -> (2a - x, y)`` across the vertical line ``x = a``."""

    def __init__(self, axis: float):
        self.axis = float(axis)

    def __call__(self, points):
        p = np.array(points, dtype=float)
        p[..., 0] = 2.0 * self.axis - p[..., 0]
        return p

    def __repr__(self):
        return f"Reflection(axis={self.axis!r})"


@dataclass(frozen=True)
class DumbbellSpec:
    """Full geometric description of one dumbbell ``Omega_eps``."""

    left: BulkDomain
    neck: NeckProfile
    epsilon: float
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def length(self) -> float:
        return self.neck.length

    @property
    def axis(self) -> float:
        return 0.5 * self.neck.length

    @property
    def p0(self) -> np.ndarray:
        return np.array([0.0, 0.0])

    @property
    def p1(self) -> np.ndarray:
        return np.array([self.neck.length, 0.0])

    def with_epsilon(self, epsilon: float) -> "DumbbellSpec":
        return replace(self, epsilon=float(epsilon))

    def opening(self, epsilon: float | None = None) -> float:
        eps = self.epsilon if epsilon is None else epsilon
        return float(eps * self.neck.samples[0])

    def bulk_area(self) -> float:
        return self.left.area()

    def area(self, epsilon: float | None = None) -> float:
        eps = self.epsilon if epsilon is None else epsilon
        return 2.0 * self.bulk_area() + eps * self.neck.integral()

    def left_polygon(self) -> np.ndarray:
        return self.left.neck_frame_vertices()

    def right_polygon(self) -> np.ndarray:
        """Mirror image of the left bulk, re-oriented counterclockwise."""
        return mirror_map(self)(self.left_polygon())[::-1]


def validate(spec: DumbbellSpec) -> list[str]:
    """Every violated invariant as a readable message; empty when valid."""
    out = list(spec.neck.violations())
    out += spec.left.violations()
    eps = spec.epsilon
    if not (np.isfinite(eps) and 0.0 < eps <= 1.0):
        out.append("epsilon must lie in (0, 1]")
    elif not spec.neck.violations():
        ell = spec.left.flat_halfwidth
        for end, gv in (("left", spec.neck.samples[0]), ("right", spec.neck.samples[-1])):
            if eps * gv >= ell:
                msg = f"neck opening {eps * gv:g} exceeds flat segment half-length {ell:g}"
                if msg not in out:
                    out.append(msg)
    return out


def require_valid(spec: DumbbellSpec) -> None:
    problems = validate(spec)
    if problems:
        raise InvalidSpec(problems)


def mirror_map(spec: DumbbellSpec) -> Reflection:
    """Isometry taking the left bulk to the right one and fixing the neck midline."""
    return Reflection(spec.axis)


def _insert_opening(poly: np.ndarray, top: float) -> np.ndarray:
    """Split the flat edge through the origin at ``y = 0`` and ``y = top`` and
    rotate so the list starts at ``(0, top)``."""
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if a[0] == 0.0 and b[0] == 0.0 and a[1] <= 0.0 and b[1] >= top:
            ring = [tuple(p) for p in np.roll(poly, -i, axis=0)]
            # ring[0] = a, ring[1] = b
            head = [(0.0, 0.0)] if a[1] == 0.0 else [ring[0], (0.0, 0.0)]
            tail = ring[2:] if b[1] == top else [ring[1]] + ring[2:]
            return np.array([(0.0, top)] + tail + head)
    raise InvalidSpec(["attachment segment not found on the bulk boundary"])


def boundary_polyline(spec: DumbbellSpec, epsilon: float | None = None) -> list[np.ndarray]:
    """Closed counterclockwise boundary of ``Omega_eps`` in the neck frame.

    Returns one polygon (first vertex not repeated) for ``epsilon > 0``, and
    the two separated bulk polygons for ``epsilon == 0``.
    """
    eps = spec.epsilon if epsilon is None else float(epsilon)
    check = spec if eps == 0.0 else spec.with_epsilon(eps)
    problems = [p for p in validate(check) if not (eps == 0.0 and p.startswith("epsilon"))]
    if problems:
        raise InvalidSpec(problems)
    left = spec.left_polygon()
    if eps == 0.0:
        return [left.copy(), spec.right_polygon()]
    L = spec.length
    g = spec.neck.samples
    xs = spec.neck.nodes
    left_seq = _insert_opening(left, eps * g[0])
    right_seq = mirror_map(spec)(left_seq)[::-1]
    top = np.column_stack([xs[-2:0:-1], eps * g[-2:0:-1]])
    poly = np.vstack([left_seq, [[L, 0.0]], right_seq[1:], top])
    return [poly]


def to_mesh_frame(points, spec: DumbbellSpec) -> np.ndarray:
    p = np.array(points, dtype=float)
    p[..., 0] -= spec.axis
    return p


def from_mesh_frame(points, spec: DumbbellSpec) -> np.ndarray:
    p = np.array(points, dtype=float)
    p[..., 0] += spec.axis
    return p
