"""Ground-truth annotation tracks: normalized JSONL parsing, TEyeD import,
and construction of per-frame visible ground-truth regions.

Normalized file layout: UTF-8 JSONL whose first record is a header
{"video_id", "width", "height", "frame_rate"} followed by one record per frame
{"frame": int, "pupil": [cx, cy, a, b, theta] | null, "iris": [...] | null,
"eyelid": [[x, y], ...] | null}, angles in radians.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .errors import (
    DuplicateFrame,
    FormatError,
    InconsistentFrameCounts,
    MissingAnnotation,
    NonMonotonicFrame,
    ParseError,
)
from .geom import Ellipse, PixelSet, Point2D, Polygon, rasterize_ellipse, rasterize_polygon

FEATURES = ("pupil", "iris", "sclera", "eye_opening")


@dataclass(frozen=True)
class FrameAnnotation:
    frame_index: int
    pupil: Ellipse | None = None
    iris: Ellipse | None = None
    eyelid: Polygon | None = None

    def __post_init__(self) -> None:
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")


@dataclass(frozen=True)
class AnnotationTrack:
    video_id: str
    width: int
    height: int
    frame_rate: float
    frames: tuple[FrameAnnotation, ...]

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"bad dimensions {self.width}x{self.height}")
        if not (self.frame_rate > 0 and math.isfinite(self.frame_rate)):
            raise ValueError(f"frame_rate must be > 0, got {self.frame_rate}")
        prev = -1
        for f in self.frames:
            if f.frame_index <= prev:
                raise ValueError(
                    f"frame indices must be strictly increasing ({f.frame_index} after {prev})"
                )
            prev = f.frame_index

    def frame_by_index(self, frame_index: int) -> FrameAnnotation:
        for f in self.frames:
            if f.frame_index == frame_index:
                return f
        raise KeyError(f"no frame {frame_index} in track {self.video_id!r}")


def _ellipse_from_record(values, line: int, feature: str) -> Ellipse:
    if not (isinstance(values, list) and len(values) == 5):
        raise ParseError(line, f"{feature}: expected [cx, cy, a, b, theta], got {values!r}")
    try:
        cx, cy, a, b, theta = (float(v) for v in values)
        return Ellipse(Point2D(cx, cy), a, b, theta)
    except (TypeError, ValueError) as exc:
        raise ParseError(line, f"{feature}: {exc}") from exc


def _polygon_from_record(values, line: int) -> Polygon:
    if not isinstance(values, list):
        raise ParseError(line, f"eyelid: expected list of [x, y] pairs, got {values!r}")
    try:
        pts = [Point2D(float(x), float(y)) for x, y in values]
        return Polygon(pts)
    except (TypeError, ValueError) as exc:
        raise ParseError(line, f"eyelid: {exc}") from exc


def parse_annotation_track(stream: IO[str]) -> AnnotationTrack:
    """Parse a normalized JSONL annotation stream into a validated track."""
    header = None
    frames: list[FrameAnnotation] = []
    prev_index = -1
    for line_no, raw in enumerate(stream, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"invalid JSON: {exc}") from exc
        if not isinstance(rec, dict):
            raise ParseError(line_no, f"expected object, got {type(rec).__name__}")
        if header is None:
            missing = {"video_id", "width", "height", "frame_rate"} - rec.keys()
            if missing:
                raise ParseError(line_no, f"header missing keys {sorted(missing)}")
            try:
                header = (
                    str(rec["video_id"]),
                    int(rec["width"]),
                    int(rec["height"]),
                    float(rec["frame_rate"]),
                )
            except (TypeError, ValueError) as exc:
                raise ParseError(line_no, f"bad header: {exc}") from exc
            continue
        if "frame" not in rec:
            raise ParseError(line_no, "record missing 'frame'")
        try:
            idx = int(rec["frame"])
        except (TypeError, ValueError) as exc:
            raise ParseError(line_no, f"bad frame index: {exc}") from exc
        if idx == prev_index:
            raise DuplicateFrame(line_no, f"frame {idx} repeated")
        if idx < prev_index:
            raise NonMonotonicFrame(line_no, f"frame {idx} after {prev_index}")
        prev_index = idx
        pupil = rec.get("pupil")
        iris = rec.get("iris")
        eyelid = rec.get("eyelid")
        try:
            frames.append(
                FrameAnnotation(
                    frame_index=idx,
                    pupil=None if pupil is None else _ellipse_from_record(pupil, line_no, "pupil"),
                    iris=None if iris is None else _ellipse_from_record(iris, line_no, "iris"),
                    eyelid=None if eyelid is None else _polygon_from_record(eyelid, line_no),
                )
            )
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from exc
    if header is None:
        raise ParseError(0, "empty stream: missing header record")
    video_id, width, height, frame_rate = header
    return AnnotationTrack(video_id, width, height, frame_rate, tuple(frames))


def serialize_annotation_track(track: AnnotationTrack, stream: IO[str]) -> None:
    """Write a track in the normalized JSONL layout (round-trips exactly)."""
    stream.write(
        json.dumps(
            {
                "video_id": track.video_id,
                "width": track.width,
                "height": track.height,
                "frame_rate": track.frame_rate,
            },
            sort_keys=True,
        )
        + "\n"
    )
    for f in track.frames:
        rec = {
            "frame": f.frame_index,
            "pupil": None
            if f.pupil is None
            else [f.pupil.center.x, f.pupil.center.y, f.pupil.semi_axis_a, f.pupil.semi_axis_b, f.pupil.angle],
            "iris": None
            if f.iris is None
            else [f.iris.center.x, f.iris.center.y, f.iris.semi_axis_a, f.iris.semi_axis_b, f.iris.angle],
            "eyelid": None if f.eyelid is None else [[v.x, v.y] for v in f.eyelid.vertices],
        }
        stream.write(json.dumps(rec, sort_keys=True) + "\n")


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    width: int
    height: int
    frame_rate: float


def _read_teyed_rows(path: str, n_fields_min: int) -> list[list[str]]:
    """Semicolon-separated rows; a leading non-numeric header row is skipped."""
    rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip().rstrip(";")
            if not raw:
                continue
            fields = [f.strip() for f in raw.split(";")]
            if line_no == 1:
                try:
                    float(fields[0])
                except ValueError:
                    continue  # header row
            if len(fields) < n_fields_min:
                raise FormatError(f"{path}: line {line_no}: expected >= {n_fields_min} fields")
            rows.append(fields)
    return rows


def _teyed_ellipse(fields: list[str], path: str, row: int) -> tuple[int, Ellipse | None]:
    """Row layout: FRAME;ANGLE[deg];CENTER_X;CENTER_Y;WIDTH;HEIGHT.

    Width/height are full axis extents; negative or zero extents are the
    'no annotation' sentinel.
    """
    try:
        frame = int(float(fields[0]))
        angle_deg, cx, cy, w, h = (float(v) for v in fields[1:6])
    except ValueError as exc:
        raise FormatError(f"{path}: row {row}: {exc}") from exc
    if w <= 0 or h <= 0:
        return frame, None
    return frame, Ellipse(Point2D(cx, cy), w / 2.0, h / 2.0, math.radians(angle_deg))


def _teyed_polygon(fields: list[str], path: str, row: int) -> tuple[int, Polygon | None]:
    """Row layout: FRAME;x1;y1;x2;y2;... with negative coordinates as sentinel."""
    try:
        frame = int(float(fields[0]))
        coords = [float(v) for v in fields[1:]]
    except ValueError as exc:
        raise FormatError(f"{path}: row {row}: {exc}") from exc
    if len(coords) % 2 != 0:
        raise FormatError(f"{path}: row {row}: odd coordinate count")
    pts = [
        Point2D(coords[i], coords[i + 1])
        for i in range(0, len(coords), 2)
        if coords[i] >= 0 and coords[i + 1] >= 0
    ]
    if len(pts) < 3:
        return frame, None
    try:
        return frame, Polygon(pts)
    except ValueError as exc:
        raise FormatError(f"{path}: row {row}: invalid eyelid polygon: {exc}") from exc


def import_teyed(
    pupil_ellipse_file: str,
    iris_ellipse_file: str,
    eyelid_polygon_file: str,
    video_meta: VideoMeta,
) -> AnnotationTrack:
    """Convert a TEyeD annotation triple into a normalized track.

    Frame counts that disagree across the three files are truncated to the
    shortest with an InconsistentFrameCounts warning.
    """
    pupil_rows = _read_teyed_rows(pupil_ellipse_file, 6)
    iris_rows = _read_teyed_rows(iris_ellipse_file, 6)
    lid_rows = _read_teyed_rows(eyelid_polygon_file, 3)
    counts = {len(pupil_rows), len(iris_rows), len(lid_rows)}
    n = min(counts)
    if len(counts) > 1:
        warnings.warn(
            f"frame counts differ (pupil={len(pupil_rows)}, iris={len(iris_rows)}, "
            f"eyelid={len(lid_rows)}); truncating to {n}",
            InconsistentFrameCounts,
        )
    if n == 0:
        warnings.warn("no annotated frames found", InconsistentFrameCounts)
    frames: list[FrameAnnotation] = []
    for i in range(n):
        fp, pupil = _teyed_ellipse(pupil_rows[i], pupil_ellipse_file, i)
        fi, iris = _teyed_ellipse(iris_rows[i], iris_ellipse_file, i)
        fl, eyelid = _teyed_polygon(lid_rows[i], eyelid_polygon_file, i)
        if not (fp == fi == fl):
            raise FormatError(
                f"row {i}: frame ids disagree across files ({fp}, {fi}, {fl})"
            )
        frames.append(FrameAnnotation(fp, pupil=pupil, iris=iris, eyelid=eyelid))
    return AnnotationTrack(
        video_meta.video_id,
        video_meta.width,
        video_meta.height,
        video_meta.frame_rate,
        tuple(frames),
    )


def visible_region(ann: FrameAnnotation, feature: str, width: int, height: int) -> PixelSet:
    """Visible ground-truth region for one feature, clipped by the eyelid.

    pupil: pupil raster within the eyelid. iris: iris raster within the
    eyelid, minus the pupil. sclera: eyelid raster minus iris and pupil.
    eye_opening: the eyelid raster itself.
    """
    if feature not in FEATURES:
        raise ValueError(f"unknown feature {feature!r}")
    if ann.eyelid is None:
        raise MissingAnnotation("eyelid")
    lid = rasterize_polygon(ann.eyelid, width, height)
    if feature == "eye_opening":
        return lid
    if feature == "pupil":
        if ann.pupil is None:
            raise MissingAnnotation("pupil")
        return rasterize_ellipse(ann.pupil, width, height) & lid
    if feature == "iris":
        if ann.iris is None:
            raise MissingAnnotation("iris")
        out = rasterize_ellipse(ann.iris, width, height) & lid
        if ann.pupil is not None:
            out = out - rasterize_ellipse(ann.pupil, width, height)
        return out
    # sclera
    out = lid
    if ann.iris is not None:
        out = out - rasterize_ellipse(ann.iris, width, height)
    if ann.pupil is not None:
        out = out - rasterize_ellipse(ann.pupil, width, height)
    return out
