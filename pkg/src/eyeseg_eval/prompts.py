"""Scripted visual prompt construction from ground-truth annotations.

One positive prompt goes on the pupil center and one midway through the iris
annulus on each side of the pupil, all with a minimum eyelid clearance. The
two sclera prompts are placed from each eye corner: a waypoint 40% of the way
from the nearest in-lid iris boundary point to the corner, then the midpoint
of where the perpendicular line through that waypoint crosses the eyelid.
Role assembly afterwards reuses the positives as negatives for the other
features.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .annotations import FrameAnnotation
from .errors import MissingAnnotation, NoFeasiblePoint, PromptInfeasible
from .geom import (
    DEFAULT_ELLIPSE_SAMPLES,
    Ellipse,
    Point2D,
    Polygon,
    closest_ellipse_point,
    distance_to_polygon_boundary,
    line_polygon_intersections,
    point_in_ellipse,
    point_in_polygon,
)

SIDES = ("left", "right")


@dataclass(frozen=True)
class PromptPoint:
    location: Point2D
    feature: str  # pupil | iris | sclera
    polarity: str  # positive | negative

    def __post_init__(self) -> None:
        if self.feature not in ("pupil", "iris", "sclera"):
            raise ValueError(f"unknown feature {self.feature!r}")
        if self.polarity not in ("positive", "negative"):
            raise ValueError(f"unknown polarity {self.polarity!r}")


@dataclass(frozen=True)
class PromptSet:
    frame_index: int
    points: tuple[PromptPoint, ...]
    margin: float

    def positives(self, feature: str | None = None) -> list[PromptPoint]:
        return [
            p
            for p in self.points
            if p.polarity == "positive" and (feature is None or p.feature == feature)
        ]


def _ray_ellipse_exit(origin: Point2D, direction: tuple[float, float], e: Ellipse) -> float | None:
    """Largest t >= 0 with origin + t*direction on the ellipse boundary."""
    c = math.cos(e.angle)
    s = math.sin(e.angle)
    wx = origin.x - e.center.x
    wy = origin.y - e.center.y
    k0 = (wx * c + wy * s) / e.semi_axis_a
    k1 = (direction[0] * c + direction[1] * s) / e.semi_axis_a
    m0 = (wy * c - wx * s) / e.semi_axis_b
    m1 = (direction[1] * c - direction[0] * s) / e.semi_axis_b
    qa = k1 * k1 + m1 * m1
    qb = 2.0 * (k0 * k1 + m0 * m1)
    qc = k0 * k0 + m0 * m0 - 1.0
    if qa == 0.0:
        return None
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return None
    root = (-qb + math.sqrt(disc)) / (2.0 * qa)
    return root if root >= 0.0 else None


def _valid_positive(p: Point2D, eyelid: Polygon, margin: float) -> bool:
    return point_in_polygon(p, eyelid) and distance_to_polygon_boundary(p, eyelid) >= margin


def _iris_point(
    side: str,
    direction: tuple[float, float],
    iris: Ellipse,
    pupil: Ellipse,
    eyelid: Polygon,
    margin: float,
) -> Point2D:
    t_iris = iris.major_radius()
    t_exit = _ray_ellipse_exit(iris.center, direction, pupil)
    t_inner = 0.0 if t_exit is None else max(t_exit, 0.0)
    if t_inner >= t_iris:
        raise PromptInfeasible(side, "pupil reaches the iris boundary along the major axis")
    t = (t_inner + t_iris) / 2.0
    # nudge toward the iris center in 1-px steps until the margin holds
    while True:
        p = Point2D(iris.center.x + t * direction[0], iris.center.y + t * direction[1])
        if _valid_positive(p, eyelid, margin):
            if point_in_ellipse(p, pupil):
                raise PromptInfeasible(side, "iris point nudged into the pupil")
            return p
        t -= 1.0
        if t <= t_inner:
            raise PromptInfeasible(side, "no iris point clears the eyelid margin")


def _eye_corner(eyelid: Polygon, side: str, iris_center_y: float) -> Point2D:
    if side == "left":
        key = lambda v: (v.x, abs(v.y - iris_center_y), v.y)
    else:
        key = lambda v: (-v.x, abs(v.y - iris_center_y), v.y)
    return min(eyelid.vertices, key=key)


def _sclera_point(
    side: str,
    iris: Ellipse,
    eyelid: Polygon,
    sample_count: int,
) -> Point2D:
    corner = _eye_corner(eyelid, side, iris.center.y)
    try:
        anchor = closest_ellipse_point(iris, corner, eyelid, sample_count)
    except NoFeasiblePoint as exc:
        raise PromptInfeasible(side, f"no iris boundary inside the eyelid: {exc}") from exc
    ax = corner.x - anchor.x
    ay = corner.y - anchor.y
    norm = math.hypot(ax, ay)
    if norm == 0.0:
        raise PromptInfeasible(side, "eye corner coincides with the iris boundary")
    waypoint = Point2D(anchor.x + 0.4 * ax, anchor.y + 0.4 * ay)
    perp = (-ay / norm, ax / norm)
    hits = line_polygon_intersections(waypoint, perp, eyelid)
    before = after = None
    for q in hits:
        s = (q.x - waypoint.x) * perp[0] + (q.y - waypoint.y) * perp[1]
        if s < -1e-9:
            if before is None or s > before[0]:
                before = (s, q)
        elif s > 1e-9:
            if after is None or s < after[0]:
                after = (s, q)
    if before is None or after is None:
        raise PromptInfeasible(
            side, f"perpendicular line crosses the eyelid {len(hits)} time(s); need 2 bracketing the waypoint"
        )
    p = Point2D((before[1].x + after[1].x) / 2.0, (before[1].y + after[1].y) / 2.0)
    if not point_in_polygon(p, eyelid):
        raise PromptInfeasible(side, "sclera midpoint falls outside the eyelid")
    if point_in_ellipse(p, iris):
        raise PromptInfeasible(side, "sclera midpoint falls inside the iris")
    return p


def generate_prompt_points(
    ann: FrameAnnotation,
    margin: float = 10.0,
    iris_sample_count: int = DEFAULT_ELLIPSE_SAMPLES,
) -> PromptSet:
    """Positive prompt set for one frame: 1 pupil, 2 iris, 2 sclera points."""
    for feature in ("pupil", "iris", "eyelid"):
        if getattr(ann, feature) is None:
            raise MissingAnnotation(feature)
    pupil, iris, eyelid = ann.pupil, ann.iris, ann.eyelid

    if not _valid_positive(pupil.center, eyelid, margin):
        raise PromptInfeasible("pupil", f"pupil center lacks {margin} px eyelid clearance")

    u = iris.major_axis_direction()
    if u[0] < 0 or (u[0] == 0 and u[1] < 0):
        u = (-u[0], -u[1])
    directions = {"left": (-u[0], -u[1]), "right": u}

    points = [PromptPoint(pupil.center, "pupil", "positive")]
    for side in SIDES:
        points.append(
            PromptPoint(_iris_point(side, directions[side], iris, pupil, eyelid, margin), "iris", "positive")
        )
    for side in SIDES:
        points.append(
            PromptPoint(_sclera_point(side, iris, eyelid, iris_sample_count), "sclera", "positive")
        )
    return PromptSet(frame_index=ann.frame_index, points=tuple(points), margin=margin)


def assemble_prompt_roles(positives: PromptSet) -> PromptSet:
    """Add the cross-feature negatives: the pupil point for iris and sclera,
    both iris points for sclera, both sclera points for iris."""
    by_feature = {f: positives.positives(f) for f in ("pupil", "iris", "sclera")}
    if (
        len(by_feature["pupil"]) != 1
        or len(by_feature["iris"]) != 2
        or len(by_feature["sclera"]) != 2
        or any(p.polarity != "positive" for p in positives.points)
    ):
        raise ValueError("expected exactly 1 pupil, 2 iris and 2 sclera positives")
    pupil = by_feature["pupil"][0]
    negatives = [
        PromptPoint(pupil.location, "iris", "negative"),
        PromptPoint(pupil.location, "sclera", "negative"),
    ]
    negatives.extend(PromptPoint(p.location, "sclera", "negative") for p in by_feature["iris"])
    negatives.extend(PromptPoint(p.location, "iris", "negative") for p in by_feature["sclera"])
    return PromptSet(
        frame_index=positives.frame_index,
        points=positives.points + tuple(negatives),
        margin=positives.margin,
    )


def prompt_set_to_json(prompt_set: PromptSet) -> str:
    """Deterministic JSON for the prompt file interface."""
    payload = {
        "frame": prompt_set.frame_index,
        "margin": prompt_set.margin,
        "points": [
            {
                "x": p.location.x,
                "y": p.location.y,
                "feature": p.feature,
                "polarity": p.polarity,
            }
            for p in prompt_set.points
        ],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def prompt_set_from_json(text: str) -> PromptSet:
    data = json.loads(text)
    points = tuple(
        PromptPoint(Point2D(float(p["x"]), float(p["y"])), str(p["feature"]), str(p["polarity"]))
        for p in data["points"]
    )
    return PromptSet(
        frame_index=int(data["frame"]),
        points=points,
        margin=float(data.get("margin", 10.0)),
    )
