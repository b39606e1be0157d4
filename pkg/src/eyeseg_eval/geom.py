"""Geometric primitives and pixel-grid rasterization.

Conventions used throughout the toolkit: pixel (x, y) covers the unit square
[x, x+1) x [y, y+1) and is represented by its center (x + 0.5, y + 0.5); a
point exactly on a shape boundary counts as inside. These two rules make the
rasterized ground truth and any per-pixel oracle agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .errors import NoFeasiblePoint

# Point-on-edge tolerance (px). distance_to_polygon_boundary(p) <= BOUNDARY_EPS
# and "p counts as inside" are the same statement.
BOUNDARY_EPS = 1e-9
# Line/polygon intersection dedup tolerance (px); avoids double-counted vertex hits.
DEDUP_EPS = 1e-6

DEFAULT_ELLIPSE_SAMPLES = 720


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def distance_to(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Ellipse:
    """Ellipse given by center, semi-axes and the rotation of axis a from +x.

    The angle is normalized to [0, pi) on construction; axis a is not required
    to be the longer one.
    """

    center: Point2D
    semi_axis_a: float
    semi_axis_b: float
    angle: float = 0.0

    def __post_init__(self) -> None:
        for name in ("semi_axis_a", "semi_axis_b"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")
        if not math.isfinite(self.angle):
            raise ValueError(f"angle must be finite, got {self.angle}")
        object.__setattr__(self, "angle", self.angle % math.pi)

    def boundary_point(self, t: float) -> Point2D:
        """Parametric boundary point at parameter t in [0, 2*pi)."""
        c = math.cos(self.angle)
        s = math.sin(self.angle)
        u = self.semi_axis_a * math.cos(t)
        v = self.semi_axis_b * math.sin(t)
        return Point2D(self.center.x + u * c - v * s, self.center.y + u * s + v * c)

    def major_axis_direction(self) -> tuple[float, float]:
        """Unit vector along the longer axis."""
        if self.semi_axis_a >= self.semi_axis_b:
            return (math.cos(self.angle), math.sin(self.angle))
        return (-math.sin(self.angle), math.cos(self.angle))

    def major_radius(self) -> float:
        return max(self.semi_axis_a, self.semi_axis_b)


@dataclass(frozen=True)
class LineSeg:
    p0: Point2D
    p1: Point2D

    def __post_init__(self) -> None:
        if self.p0 == self.p1:
            raise ValueError("degenerate segment: endpoints coincide")


def _orient(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _segments_intersect(
    ax: float, ay: float, bx: float, by: float,
    cx: float, cy: float, dx: float, dy: float,
) -> bool:
    """True if closed segments AB and CD share any point."""
    d1 = _orient(cx, cy, dx, dy, ax, ay)
    d2 = _orient(cx, cy, dx, dy, bx, by)
    d3 = _orient(ax, ay, bx, by, cx, cy)
    d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True

    def on(ax_, ay_, bx_, by_, px_, py_):
        return (
            min(ax_, bx_) <= px_ <= max(ax_, bx_)
            and min(ay_, by_) <= py_ <= max(ay_, by_)
        )

    if d1 == 0 and on(cx, cy, dx, dy, ax, ay):
        return True
    if d2 == 0 and on(cx, cy, dx, dy, bx, by):
        return True
    if d3 == 0 and on(ax, ay, bx, by, cx, cy):
        return True
    if d4 == 0 and on(ax, ay, bx, by, dx, dy):
        return True
    return False


class Polygon:
    """Simple polygon over >= 3 vertices, implicitly closed.

    Rejects polygons with repeated consecutive vertices, zero area, or
    intersections between non-adjacent edges.
    """

    __slots__ = ("vertices", "_xs", "_ys")

    def __init__(self, vertices: Sequence[Point2D]):
        verts = tuple(vertices)
        if len(verts) < 3:
            raise ValueError(f"polygon needs >= 3 vertices, got {len(verts)}")
        n = len(verts)
        for i in range(n):
            if verts[i] == verts[(i + 1) % n]:
                raise ValueError(f"repeated consecutive vertex at index {i}")
        xs = np.array([v.x for v in verts], dtype=np.float64)
        ys = np.array([v.y for v in verts], dtype=np.float64)
        area2 = float(np.dot(xs, np.roll(ys, -1)) - np.dot(ys, np.roll(xs, -1)))
        if area2 == 0.0:
            raise ValueError("polygon has zero area")
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                c, d = verts[j], verts[(j + 1) % n]
                if _segments_intersect(a.x, a.y, b.x, b.y, c.x, c.y, d.x, d.y):
                    raise ValueError(f"self-intersecting polygon (edges {i} and {j})")
        self.vertices = verts
        self._xs = xs
        self._ys = ys
        self._xs.setflags(write=False)
        self._ys.setflags(write=False)

    def area(self) -> float:
        return abs(
            float(np.dot(self._xs, np.roll(self._ys, -1)) - np.dot(self._ys, np.roll(self._xs, -1)))
        ) / 2.0

    def edges(self) -> Iterator[tuple[Point2D, Point2D]]:
        n = len(self.vertices)
        for i in range(n):
            yield self.vertices[i], self.vertices[(i + 1) % n]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Polygon) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    def __repr__(self) -> str:
        return f"Polygon({list(self.vertices)!r})"


class PixelSet:
    """Immutable set of in-bounds integer pixel coordinates on a bounded grid.

    Backed by a boolean (height, width) mask, which gives set semantics for
    free and keeps intersection/union/difference as cheap array ops.
    """

    __slots__ = ("_mask", "_count")

    def __init__(self, mask: np.ndarray):
        arr = np.array(mask, dtype=bool, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"mask must be 2-D and nonempty, got shape {arr.shape}")
        arr.setflags(write=False)
        self._mask = arr
        self._count: int | None = None

    @classmethod
    def _wrap(cls, mask: np.ndarray) -> "PixelSet":
        """Take ownership of a freshly built mask without copying."""
        obj = cls.__new__(cls)
        if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
            raise ValueError(f"mask must be 2-D and nonempty, got shape {mask.shape}")
        mask = mask.astype(bool, copy=False)
        mask.setflags(write=False)
        obj._mask = mask
        obj._count = None
        return obj

    @classmethod
    def empty(cls, width: int, height: int) -> "PixelSet":
        if width < 1 or height < 1:
            raise ValueError(f"grid must be >= 1x1, got {width}x{height}")
        return cls._wrap(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_coords(cls, width: int, height: int, coords: Iterable[tuple[int, int]]) -> "PixelSet":
        if width < 1 or height < 1:
            raise ValueError(f"grid must be >= 1x1, got {width}x{height}")
        mask = np.zeros((height, width), dtype=bool)
        for x, y in coords:
            xi, yi = int(x), int(y)
            if (xi, yi) != (x, y):
                raise ValueError(f"non-integer pixel coordinate ({x}, {y})")
            if not (0 <= xi < width and 0 <= yi < height):
                raise ValueError(f"pixel ({xi}, {yi}) outside {width}x{height} grid")
            mask[yi, xi] = True
        return cls._wrap(mask)

    @property
    def width(self) -> int:
        return self._mask.shape[1]

    @property
    def height(self) -> int:
        return self._mask.shape[0]

    @property
    def mask(self) -> np.ndarray:
        """Read-only boolean (height, width) view."""
        return self._mask

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    def __len__(self) -> int:
        if self._count is None:
            self._count = int(self._mask.sum())
        return self._count

    def __contains__(self, xy: tuple[int, int]) -> bool:
        x, y = xy
        if not (0 <= x < self.width and 0 <= y < self.height):
            return False
        return bool(self._mask[y, x])

    def __iter__(self) -> Iterator[tuple[int, int]]:
        ys, xs = np.nonzero(self._mask)
        return iter(list(zip(xs.tolist(), ys.tolist())))

    def coords(self) -> list[tuple[int, int]]:
        """Member pixels in row-major order."""
        return list(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PixelSet):
            return NotImplemented
        return self._mask.shape == other._mask.shape and bool(
            np.array_equal(self._mask, other._mask)
        )

    __hash__ = None  # type: ignore[assignment]

    def _require_same_grid(self, other: "PixelSet") -> None:
        if self._mask.shape != other._mask.shape:
            raise ValueError(
                f"grid mismatch: {self.width}x{self.height} vs {other.width}x{other.height}"
            )

    def __and__(self, other: "PixelSet") -> "PixelSet":
        self._require_same_grid(other)
        return PixelSet._wrap(self._mask & other._mask)

    def __or__(self, other: "PixelSet") -> "PixelSet":
        self._require_same_grid(other)
        return PixelSet._wrap(self._mask | other._mask)

    def __sub__(self, other: "PixelSet") -> "PixelSet":
        self._require_same_grid(other)
        return PixelSet._wrap(self._mask & ~other._mask)

    def __repr__(self) -> str:
        return f"PixelSet({self.width}x{self.height}, {len(self)} px)"


def point_in_ellipse(p: Point2D, e: Ellipse) -> bool:
    """Quadratic-form membership test; the boundary counts as inside."""
    c = math.cos(e.angle)
    s = math.sin(e.angle)
    dx = p.x - e.center.x
    dy = p.y - e.center.y
    u = (dx * c + dy * s) / e.semi_axis_a
    v = (dy * c - dx * s) / e.semi_axis_b
    return u * u + v * v <= 1.0


def point_in_polygon(p: Point2D, poly: Polygon) -> bool:
    """Even-odd rule; points within BOUNDARY_EPS of an edge count as inside."""
    if distance_to_polygon_boundary(p, poly) <= BOUNDARY_EPS:
        return True
    xs, ys = poly._xs, poly._ys
    n = len(xs)
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = xs[i], ys[i]
        xj, yj = xs[j], ys[j]
        if (yi > p.y) != (yj > p.y):
            xint = (xj - xi) * (p.y - yi) / (yj - yi) + xi
            if p.x < xint:
                inside = not inside
        j = i
    return inside


def _point_segment_dist2(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> float:
    ex = bx - ax
    ey = by - ay
    t = ((px - ax) * ex + (py - ay) * ey) / (ex * ex + ey * ey)
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ddx = px - (ax + t * ex)
    ddy = py - (ay + t * ey)
    return ddx * ddx + ddy * ddy


def distance_to_polygon_boundary(p: Point2D, poly: Polygon) -> float:
    """Unsigned minimum Euclidean distance from p to any polygon edge."""
    best = math.inf
    for a, b in poly.edges():
        d2 = _point_segment_dist2(p.x, p.y, a.x, a.y, b.x, b.y)
        if d2 < best:
            best = d2
    return math.sqrt(best)


def closest_ellipse_point(
    e: Ellipse,
    target: Point2D,
    constraint: Polygon,
    sample_count: int = DEFAULT_ELLIPSE_SAMPLES,
) -> Point2D:
    """Nearest sampled ellipse boundary point to target that lies inside constraint.

    Scans sample_count uniformly spaced parameters; distance ties (within
    1e-9 px) resolve to the smallest parameter.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    feasible: list[tuple[float, Point2D]] = []
    for k in range(sample_count):
        t = 2.0 * math.pi * k / sample_count
        p = e.boundary_point(t)
        if point_in_polygon(p, constraint):
            feasible.append((p.distance_to(target), p))
    if not feasible:
        raise NoFeasiblePoint(
            f"no sampled ellipse boundary point (n={sample_count}) inside constraint polygon"
        )
    dmin = min(d for d, _ in feasible)
    for d, p in feasible:
        if d <= dmin + 1e-9:
            return p
    raise AssertionError("unreachable")


def line_polygon_intersections(
    p: Point2D, direction: tuple[float, float], poly: Polygon
) -> list[Point2D]:
    """All intersections of the infinite line through p along direction with the
    polygon's edges, deduplicated within DEDUP_EPS and sorted along direction."""
    dx, dy = direction
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        raise ValueError("direction must be nonzero")
    hits: list[tuple[float, Point2D]] = []
    for a, b in poly.edges():
        ex = b.x - a.x
        ey = b.y - a.y
        denom = dx * ey - dy * ex
        if abs(denom) <= 1e-12 * norm * math.hypot(ex, ey):
            # parallel edge: collinear iff a is on the line
            if abs(dx * (a.y - p.y) - dy * (a.x - p.x)) <= BOUNDARY_EPS * norm:
                for q in (a, b):
                    s = ((q.x - p.x) * dx + (q.y - p.y) * dy) / (norm * norm)
                    hits.append((s, q))
            continue
        u = ((a.x - p.x) * dy - (a.y - p.y) * dx) / denom
        if 0.0 <= u <= 1.0:
            q = Point2D(a.x + u * ex, a.y + u * ey)
            s = ((q.x - p.x) * dx + (q.y - p.y) * dy) / (norm * norm)
            hits.append((s, q))
    hits.sort(key=lambda h: h[0])
    out: list[Point2D] = []
    for _, q in hits:
        if out and q.distance_to(out[-1]) <= DEDUP_EPS:
            continue
        out.append(q)
    return out


def rasterize_ellipse(e: Ellipse, width: int, height: int) -> PixelSet:
    """Pixels whose center satisfies point_in_ellipse."""
    if width < 1 or height < 1:
        raise ValueError(f"grid must be >= 1x1, got {width}x{height}")
    mask = kernels.ellipse_mask(
        e.center.x, e.center.y, e.semi_axis_a, e.semi_axis_b, e.angle, width, height
    )
    return PixelSet._wrap(mask)


def rasterize_polygon(poly: Polygon, width: int, height: int) -> PixelSet:
    """Pixels whose center satisfies point_in_polygon."""
    if width < 1 or height < 1:
        raise ValueError(f"grid must be >= 1x1, got {width}x{height}")
    mask = kernels.polygon_mask(poly._xs, poly._ys, width, height)
    return PixelSet._wrap(mask)
