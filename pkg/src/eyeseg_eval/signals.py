"""Per-feature signals from mask archives: centers, areas and loss flags.

CR and pupil centers come from the centroid of the largest 4-connected
component; in concept mode the pupil is followed by a nearest-blob tracker
that reinitializes at the image center after track loss. The iris center is
the center of an ellipse fitted to the iris boundary pixels adjacent to the
sclera mask. Loss is flagged per video wherever a feature's area drops below
half of the 20th percentile of its own area distribution (defaults).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import DegenerateFit
from .geom import Ellipse, PixelSet, Point2D
from .maskio import MaskArchive, feature_mask

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)

SIGNAL_FEATURES = ("cr", "pupil", "iris", "sclera")

# Features whose per-frame area is the largest-blob area rather than the
# total mask pixel count.
_LARGEST_BLOB_AREA = ("cr", "pupil")


@dataclass(frozen=True)
class Blob:
    """One 4-connected component of a mask."""

    pixels: PixelSet
    area: int
    centroid: Point2D
    bbox: tuple[int, int, int, int]  # x0, y0, x1, y1 inclusive

    @property
    def bbox_area(self) -> int:
        x0, y0, x1, y1 = self.bbox
        return (x1 - x0 + 1) * (y1 - y0 + 1)

    @property
    def fill(self) -> float:
        return self.area / self.bbox_area


@dataclass(frozen=True)
class ShapeCriteria:
    """Blob admission rules for multi-object (concept) outputs."""

    min_area: float = 25.0
    max_area: float = math.inf
    min_fill: float = 0.4

    def __post_init__(self) -> None:
        if not (0 <= self.min_area < self.max_area):
            raise ValueError(f"need 0 <= min_area < max_area, got {self.min_area}, {self.max_area}")
        if not (0 < self.min_fill <= 1):
            raise ValueError(f"min_fill must be in (0, 1], got {self.min_fill}")

    def admits(self, blob: Blob) -> bool:
        return self.min_area <= blob.area <= self.max_area and blob.fill >= self.min_fill


def default_shape_criteria(width: int, height: int) -> ShapeCriteria:
    return ShapeCriteria(min_area=25.0, max_area=0.25 * width * height, min_fill=0.4)


def connected_blobs(mask: PixelSet) -> list[Blob]:
    """4-connected components, largest area first; ties by smaller min-y,
    then smaller min-x. Centroids use pixel centers (x+0.5, y+0.5)."""
    labels, n = ndimage.label(mask.mask, structure=FOUR_CONNECTED)
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)
    ids = labels[ys, xs]
    areas = np.bincount(ids, minlength=n + 1)[1:]
    sum_x = np.bincount(ids, weights=xs, minlength=n + 1)[1:]
    sum_y = np.bincount(ids, weights=ys, minlength=n + 1)[1:]
    min_x = np.full(n + 1, np.iinfo(np.int64).max)
    min_y = np.full(n + 1, np.iinfo(np.int64).max)
    max_x = np.full(n + 1, -1)
    max_y = np.full(n + 1, -1)
    np.minimum.at(min_x, ids, xs)
    np.minimum.at(min_y, ids, ys)
    np.maximum.at(max_x, ids, xs)
    np.maximum.at(max_y, ids, ys)
    order = sorted(range(1, n + 1), key=lambda k: (-areas[k - 1], min_y[k], min_x[k]))
    blobs = []
    for k in order:
        area = int(areas[k - 1])
        centroid = Point2D(sum_x[k - 1] / area + 0.5, sum_y[k - 1] / area + 0.5)
        blobs.append(
            Blob(
                pixels=PixelSet._wrap(labels == k),
                area=area,
                centroid=centroid,
                bbox=(int(min_x[k]), int(min_y[k]), int(max_x[k]), int(max_y[k])),
            )
        )
    return blobs


def largest_blob_center(mask: PixelSet) -> tuple[Point2D, int] | None:
    """Centroid and area of the largest blob; None for an empty mask."""
    blobs = connected_blobs(mask)
    if not blobs:
        return None
    return blobs[0].centroid, blobs[0].area


@dataclass(frozen=True)
class FeatureSignal:
    """Per-frame center/area/loss records for one feature.

    Centers are NaN wherever lost is set; sclera carries areas only.
    """

    feature: str
    frames: np.ndarray  # int64 frame indices
    x: np.ndarray  # float64, NaN when absent
    y: np.ndarray
    areas: np.ndarray  # int64
    lost: np.ndarray  # bool

    def __post_init__(self) -> None:
        n = len(self.frames)
        if not (len(self.x) == len(self.y) == len(self.areas) == len(self.lost) == n):
            raise ValueError("signal arrays must have equal length")

    def center(self, i: int) -> Point2D | None:
        if math.isnan(self.x[i]) or math.isnan(self.y[i]):
            return None
        return Point2D(float(self.x[i]), float(self.y[i]))

    @property
    def loss_fraction(self) -> float:
        if len(self.lost) == 0:
            return 0.0
        return float(np.mean(self.lost))


def _signal(feature, frames, xs, ys, areas, lost) -> FeatureSignal:
    xs = np.asarray(xs, dtype=np.float64).copy()
    ys = np.asarray(ys, dtype=np.float64).copy()
    lost = np.asarray(lost, dtype=bool)
    xs[lost] = np.nan
    ys[lost] = np.nan
    return FeatureSignal(
        feature=feature,
        frames=np.asarray(frames, dtype=np.int64),
        x=xs,
        y=ys,
        areas=np.asarray(areas, dtype=np.int64),
        lost=lost,
    )


def track_pupil_blobs(
    frames: Sequence[PixelSet],
    criteria: ShapeCriteria,
    image_size: tuple[int, int],
) -> FeatureSignal:
    """Follow one pupil blob through a multi-object mask sequence.

    Blobs failing the shape criteria are discarded. The first valid frame
    (and every frame after a loss) selects the blob nearest the image center;
    afterwards the blob nearest the previous selection wins. Ties go to the
    larger area, then to blob sort order.
    """
    width, height = image_size
    center = Point2D(width / 2.0, height / 2.0)
    n = len(frames)
    xs = np.full(n, np.nan)
    ys = np.full(n, np.nan)
    areas = np.zeros(n, dtype=np.int64)
    lost = np.zeros(n, dtype=bool)
    prev: Point2D | None = None
    for i, mask in enumerate(frames):
        candidates = [b for b in connected_blobs(mask) if criteria.admits(b)]
        if not candidates:
            lost[i] = True
            prev = None
            continue
        ref = center if prev is None else prev
        best = min(
            enumerate(candidates),
            key=lambda item: (item[1].centroid.distance_to(ref), -item[1].area, item[0]),
        )[1]
        xs[i] = best.centroid.x
        ys[i] = best.centroid.y
        areas[i] = best.area
        prev = best.centroid
    return _signal("pupil", np.arange(n), xs, ys, areas, lost)


def fit_ellipse_lsq(points: Sequence[Point2D]) -> Ellipse:
    """Direct least-squares conic fit with the ellipse constraint.

    Returns the canonical form with the major semi-axis first and the angle
    of the major axis in [0, pi). Needs >= 6 non-collinear points.
    """
    if len(points) < 6:
        raise ValueError(f"need >= 6 points, got {len(points)}")
    x = np.array([p.x for p in points], dtype=np.float64)
    y = np.array([p.y for p in points], dtype=np.float64)
    # center and scale for conditioning
    mx, my = x.mean(), y.mean()
    scale = max(x.std(), y.std())
    if scale == 0:
        raise DegenerateFit("all points coincide")
    xn = (x - mx) / scale
    yn = (y - my) / scale

    d1 = np.column_stack([xn * xn, xn * yn, yn * yn])
    d2 = np.column_stack([xn, yn, np.ones_like(xn)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        t_mat = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError as exc:
        raise DegenerateFit(f"singular scatter matrix: {exc}") from exc
    m = s1 + s2 @ t_mat
    # inverse of the constraint matrix [[0,0,2],[0,-1,0],[2,0,0]]
    m = np.array([m[2] / 2.0, -m[1], m[0] / 2.0])
    try:
        eigval, eigvec = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise DegenerateFit(f"eigen solve failed: {exc}") from exc
    cond = 4.0 * eigvec[0] * eigvec[2] - eigvec[1] ** 2
    ok = np.where(np.isreal(eigval) & (np.real(cond) > 0))[0]
    if len(ok) == 0:
        raise DegenerateFit("no elliptical solution")
    a1 = np.real(eigvec[:, ok[0]])
    conic = np.concatenate([a1, t_mat @ a1])

    a, b, c, d, e, f = conic
    # geometric form via the 2x2 quadratic part
    q = np.array([[a, b / 2.0], [b / 2.0, c]])
    rhs = np.array([-d / 2.0, -e / 2.0])
    try:
        cx, cy = np.linalg.solve(q, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateFit(f"degenerate conic: {exc}") from exc
    s_val = a * cx * cx + b * cx * cy + c * cy * cy + d * cx + e * cy + f
    lam, vec = np.linalg.eigh(q)
    radii2 = -s_val / lam
    if np.any(radii2 <= 0) or not np.all(np.isfinite(radii2)):
        raise DegenerateFit("conic is not an ellipse")
    radii = np.sqrt(radii2)
    major = int(np.argmax(radii))
    minor = 1 - major
    angle = math.atan2(vec[1, major], vec[0, major]) % math.pi
    return Ellipse(
        center=Point2D(float(cx * scale + mx), float(cy * scale + my)),
        semi_axis_a=float(radii[major] * scale),
        semi_axis_b=float(radii[minor] * scale),
        angle=float(angle),
    )


def _boundary_pixels(blob_mask: np.ndarray) -> np.ndarray:
    """Pixels of the blob with at least one 4-neighbor outside it (or off-grid)."""
    interior = ndimage.binary_erosion(blob_mask, structure=FOUR_CONNECTED, border_value=0)
    return blob_mask & ~interior


def iris_center(
    iris_mask: PixelSet,
    sclera_mask: PixelSet,
    adjacency_radius: float = 3.0,
) -> Point2D | None:
    """Center of an ellipse fitted to the iris edges not hidden by the eyelid.

    Boundary pixels of the largest iris blob survive iff they lie within
    adjacency_radius of any sclera pixel; None (loss) if fewer than 6 survive
    or the fit degenerates.
    """
    if sclera_mask.is_empty:
        return None
    blobs = connected_blobs(iris_mask)
    if not blobs:
        return None
    boundary = _boundary_pixels(blobs[0].pixels.mask)
    # distance from every pixel to the nearest sclera pixel
    dist = ndimage.distance_transform_edt(~sclera_mask.mask)
    keep = boundary & (dist <= adjacency_radius)
    ys, xs = np.nonzero(keep)
    if len(xs) < 6:
        return None
    pts = [Point2D(float(x) + 0.5, float(y) + 0.5) for x, y in zip(xs, ys)]
    try:
        return fit_ellipse_lsq(pts).center
    except DegenerateFit:
        return None


def detect_data_loss(
    areas: Sequence[float] | np.ndarray,
    factor: float = 0.5,
    percentile: float = 20.0,
) -> np.ndarray:
    """Flag frames whose area falls below factor x the given percentile of the
    full per-video area distribution (zeros included, linear interpolation).
    Zero-area frames are always flagged."""
    arr = np.asarray(areas, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("need at least one frame")
    threshold = factor * float(np.percentile(arr, percentile))
    return (arr < threshold) | (arr == 0)


def extract_signals(
    archive: MaskArchive,
    mode: str = "visual",
    criteria: ShapeCriteria | None = None,
    adjacency_radius: float = 3.0,
    loss_factor: float = 0.5,
    loss_percentile: float = 20.0,
) -> dict[str, FeatureSignal]:
    """Feature signals for one archive.

    CR and pupil use the largest-blob centroid (the pupil switches to the
    blob tracker in concept mode); the iris center comes from the
    sclera-adjacent boundary fit; the sclera has areas only. Per-feature
    areas then feed the loss rule, and lost frames drop their centers.
    """
    if mode not in ("visual", "concept"):
        raise ValueError(f"mode must be 'visual' or 'concept', got {mode!r}")
    n = len(archive.frames)
    frame_indices = np.array([f.frame_index for f in archive.frames], dtype=np.int64)
    masks = {
        feat: [feature_mask(f, feat) for f in archive.frames] for feat in SIGNAL_FEATURES
    }
    out: dict[str, FeatureSignal] = {}

    def finalize(feature, xs, ys, areas):
        flags = detect_data_loss(areas, loss_factor, loss_percentile) if n else np.zeros(0, bool)
        if feature != "sclera":
            flags = flags | np.isnan(np.asarray(xs, dtype=np.float64))
        out[feature] = _signal(feature, frame_indices, xs, ys, areas, flags)

    for feature in ("cr", "pupil"):
        if feature == "pupil" and mode == "concept":
            crit = criteria or default_shape_criteria(archive.width, archive.height)
            tracked = track_pupil_blobs(masks["pupil"], crit, (archive.width, archive.height))
            finalize("pupil", tracked.x, tracked.y, tracked.areas)
            continue
        xs = np.full(n, np.nan)
        ys = np.full(n, np.nan)
        areas = np.zeros(n, dtype=np.int64)
        for i, mask in enumerate(masks[feature]):
            got = largest_blob_center(mask)
            if got is not None:
                xs[i], ys[i] = got[0].x, got[0].y
                areas[i] = got[1]
        finalize(feature, xs, ys, areas)

    xs = np.full(n, np.nan)
    ys = np.full(n, np.nan)
    areas = np.array([len(m) for m in masks["iris"]], dtype=np.int64)
    for i in range(n):
        c = iris_center(masks["iris"][i], masks["sclera"][i], adjacency_radius)
        if c is not None:
            xs[i], ys[i] = c.x, c.y
    finalize("iris", xs, ys, areas)

    areas = np.array([len(m) for m in masks["sclera"]], dtype=np.int64)
    finalize("sclera", np.full(n, np.nan), np.full(n, np.nan), areas)
    return out


def write_signals_csv(signals: dict[str, FeatureSignal], stream) -> None:
    """Long-form CSV: frame, feature, cx, cy, area, lost."""
    stream.write("frame,feature,cx,cy,area,lost\n")
    for feature in SIGNAL_FEATURES:
        sig = signals.get(feature)
        if sig is None:
            continue
        for i, frame in enumerate(sig.frames.tolist()):
            cx = "" if math.isnan(sig.x[i]) else repr(float(sig.x[i]))
            cy = "" if math.isnan(sig.y[i]) else repr(float(sig.y[i]))
            stream.write(
                f"{frame},{feature},{cx},{cy},{int(sig.areas[i])},{int(sig.lost[i])}\n"
            )
