"""Quantitative evaluation: RMS-S2S precision, the IoU suite, iris/sclera
overlap, presence confusion rates with Youden's J, paired t-tests, and
per-video / dataset aggregation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .annotations import AnnotationTrack, FrameAnnotation, visible_region
from .errors import (
    ConsistencyError,
    DegenerateVariance,
    LengthMismatch,
    MissingAnnotation,
)
from .geom import PixelSet, rasterize_polygon
from .maskio import MaskArchive, MaskFrame, feature_mask
from .signals import FeatureSignal, ShapeCriteria, extract_signals

IOU_FEATURES = ("pupil", "iris", "sclera")


# --------------------------------------------------------------------------
# signal precision


def rms_s2s(signal: FeatureSignal, frame_rate: float, window_ms: float = 200.0) -> float | None:
    """Median over a moving window of the RMS sample-to-sample displacement.

    The window length is round(window_ms / 1000 * frame_rate) samples and
    advances one sample at a time; windows containing any lost sample are
    skipped. None when no window is fully valid.
    """
    if not (frame_rate > 0 and math.isfinite(frame_rate)):
        raise ValueError(f"frame_rate must be > 0, got {frame_rate}")
    n = int(round(window_ms / 1000.0 * frame_rate))
    if n < 2:
        raise ValueError(f"window of {window_ms} ms spans {n} < 2 samples at {frame_rate} Hz")
    total = len(signal.frames)
    if total < n:
        return None
    valid = ~(signal.lost | np.isnan(signal.x) | np.isnan(signal.y))
    dx = np.diff(signal.x)
    dy = np.diff(signal.y)
    pair_ok = valid[:-1] & valid[1:]
    d2 = np.where(pair_ok, dx * dx + dy * dy, 0.0)
    # window i covers samples [i, i+n): valid iff it contains n valid samples
    cum_valid = np.concatenate([[0], np.cumsum(valid)])
    window_ok = (cum_valid[n:] - cum_valid[: total - n + 1]) == n
    cum_d2 = np.concatenate([[0.0], np.cumsum(d2)])
    sums = cum_d2[n - 1 :] - cum_d2[: total - n + 1]
    if not window_ok.any():
        return None
    rms = np.sqrt(sums[window_ok] / (n - 1))
    return float(np.median(rms))


# --------------------------------------------------------------------------
# overlap accuracy


def iou(a: PixelSet, b: PixelSet) -> float | None:
    """Intersection over union; None (undefined) when both sets are empty."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(f"grid mismatch: {a.width}x{a.height} vs {b.width}x{b.height}")
    inter = int(np.count_nonzero(a.mask & b.mask))
    union = int(np.count_nonzero(a.mask | b.mask))
    if union == 0:
        return None
    return inter / union


@dataclass(frozen=True)
class FrameIoU:
    pupil: float | None
    iris: float | None
    sclera: float | None
    eye_opening: float | None


def frame_iou_suite(frame: MaskFrame, ann: FrameAnnotation) -> FrameIoU:
    """Per-feature IoU of the model masks against the eyelid-clipped ground
    truth, plus the IoU of the mask union against the whole eye opening."""
    if ann.eyelid is None:
        raise MissingAnnotation("eyelid")
    w, h = frame.width, frame.height
    values = {}
    for feat in IOU_FEATURES:
        if feat in ("pupil", "iris") and getattr(ann, feat) is None:
            gt = PixelSet.empty(w, h)
        else:
            gt = visible_region(ann, feat, w, h)
        values[feat] = iou(feature_mask(frame, feat), gt)
    union = PixelSet._wrap(
        (frame.labels & 0x02) + (frame.labels & 0x04) + (frame.labels & 0x08) != 0
    )
    values["eye_opening"] = iou(union, rasterize_polygon(ann.eyelid, w, h))
    return FrameIoU(**values)


def overlap_fraction(iris_mask: PixelSet, sclera_mask: PixelSet) -> float | None:
    """Fraction of the iris mask also present in the sclera mask; None when
    the iris mask is empty."""
    total = len(iris_mask)
    if total == 0:
        return None
    return len(iris_mask & sclera_mask) / total


# --------------------------------------------------------------------------
# presence classification


@dataclass(frozen=True)
class ConfusionCounts:
    hits: int
    misses: int
    false_alarms: int
    correct_rejections: int

    @property
    def fa_rate(self) -> float | None:
        denom = self.false_alarms + self.correct_rejections
        return None if denom == 0 else self.false_alarms / denom

    @property
    def miss_rate(self) -> float | None:
        denom = self.hits + self.misses
        return None if denom == 0 else self.misses / denom


def confusion(gt_present: Sequence[bool], model_present: Sequence[bool]) -> ConfusionCounts:
    if len(gt_present) != len(model_present):
        raise LengthMismatch(
            f"gt has {len(gt_present)} frames, model has {len(model_present)}"
        )
    hits = misses = fas = crs = 0
    for gt, got in zip(gt_present, model_present):
        if gt and got:
            hits += 1
        elif gt and not got:
            misses += 1
        elif not gt and got:
            fas += 1
        else:
            crs += 1
    return ConfusionCounts(hits, misses, fas, crs)


def youdens_j(miss_rate: float, fa_rate: float) -> float:
    """J = hit rate - false alarm rate = (1 - miss_rate) - fa_rate."""
    for name, v in (("miss_rate", miss_rate), ("fa_rate", fa_rate)):
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"{name} must be in [0, 1], got {v}")
    return (1.0 - miss_rate) - fa_rate


# --------------------------------------------------------------------------
# paired t-test


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    max_iter = 400
    eps = 1e-16
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) to about 1e-9 absolute accuracy."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float


def paired_t(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-tailed paired t-test with sample (n-1) standard deviation."""
    if len(a) != len(b):
        raise LengthMismatch(f"paired samples differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError(f"need >= 2 pairs, got {n}")
    d = [float(x) - float(y) for x, y in zip(a, b)]
    mean = sum(d) / n
    var = sum((v - mean) ** 2 for v in d) / (n - 1)
    if var == 0.0:
        raise DegenerateVariance("paired differences have zero variance")
    t = mean / math.sqrt(var / n)
    df = n - 1
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return TTestResult(t=t, df=df, p=p)


# --------------------------------------------------------------------------
# per-video evaluation and aggregation


@dataclass(frozen=True)
class EvalConfig:
    mode: str = "visual"
    window_ms: float = 200.0
    loss_factor: float = 0.5
    loss_percentile: float = 20.0
    adjacency_radius: float = 3.0
    shape_min_area: float = 25.0
    shape_max_area: float | None = None  # None: 0.25 * width * height
    shape_min_fill: float = 0.4

    def criteria_for(self, width: int, height: int) -> ShapeCriteria:
        max_area = self.shape_max_area
        if max_area is None:
            max_area = 0.25 * width * height
        return ShapeCriteria(self.shape_min_area, max_area, self.shape_min_fill)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "window_ms": self.window_ms,
            "loss_factor": self.loss_factor,
            "loss_percentile": self.loss_percentile,
            "adjacency_radius": self.adjacency_radius,
            "shape_min_area": self.shape_min_area,
            "shape_max_area": self.shape_max_area,
            "shape_min_fill": self.shape_min_fill,
        }


@dataclass(frozen=True)
class FeatureMetrics:
    """Per-video metric values for one feature.

    loss_fraction counts lost frames among those where the feature is present
    in ground truth (otherwise a blink would score as both a correct rejection
    and data loss); for CR, which has no ground truth, all frames count.
    """

    miou: float | None = None
    rms_s2s: float | None = None
    loss_fraction: float | None = None
    fa_rate: float | None = None
    miss_rate: float | None = None
    youden_j: float | None = None

    def to_dict(self) -> dict:
        return {
            "miou": self.miou,
            "rms_s2s": self.rms_s2s,
            "loss_fraction": self.loss_fraction,
            "fa_rate": self.fa_rate,
            "miss_rate": self.miss_rate,
            "youden_j": self.youden_j,
        }


@dataclass(frozen=True)
class VideoMetrics:
    video_id: str
    features: dict[str, FeatureMetrics] = field(default_factory=dict)
    eye_opening_miou: float | None = None
    iris_sclera_overlap: float | None = None

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "features": {k: v.to_dict() for k, v in sorted(self.features.items())},
            "eye_opening_miou": self.eye_opening_miou,
            "iris_sclera_overlap": self.iris_sclera_overlap,
        }


def _mean_defined(values: list[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return float(np.mean(defined))


def check_consistency(track: AnnotationTrack, archive: MaskArchive) -> None:
    """Raise ConsistencyError unless track and archive describe the same video."""
    problems = []
    if (track.width, track.height) != (archive.width, archive.height):
        problems.append(
            f"dimensions {track.width}x{track.height} vs {archive.width}x{archive.height}"
        )
    if len(track.frames) != len(archive.frames):
        problems.append(f"frame counts {len(track.frames)} vs {len(archive.frames)}")
    else:
        t_idx = [f.frame_index for f in track.frames]
        a_idx = [f.frame_index for f in archive.frames]
        if t_idx != a_idx:
            problems.append("frame index sequences differ")
    if track.frame_rate != archive.frame_rate:
        problems.append(f"frame rates {track.frame_rate} vs {archive.frame_rate}")
    if problems:
        raise ConsistencyError(
            f"track {track.video_id!r} vs archive {archive.video_id!r}: "
            + "; ".join(problems)
        )


def evaluate_video(
    track: AnnotationTrack, archive: MaskArchive, config: EvalConfig | None = None
) -> VideoMetrics:
    """Full metric suite for one (annotation track, mask archive) pair."""
    config = config or EvalConfig()
    check_consistency(track, archive)
    w, h = archive.width, archive.height
    signals = extract_signals(
        archive,
        mode=config.mode,
        criteria=config.criteria_for(w, h),
        adjacency_radius=config.adjacency_radius,
        loss_factor=config.loss_factor,
        loss_percentile=config.loss_percentile,
    )

    ious: dict[str, list[float | None]] = {f: [] for f in IOU_FEATURES}
    opening_ious: list[float | None] = []
    overlaps: list[float | None] = []
    gt_present: dict[str, list[bool]] = {f: [] for f in IOU_FEATURES}
    model_present: dict[str, list[bool]] = {f: [] for f in IOU_FEATURES}

    for ann, frame in zip(track.frames, archive.frames):
        masks = {f: feature_mask(frame, f) for f in IOU_FEATURES}
        if ann.eyelid is not None:
            suite = frame_iou_suite(frame, ann)
            for f in IOU_FEATURES:
                ious[f].append(getattr(suite, f))
            opening_ious.append(suite.eye_opening)
            for f in IOU_FEATURES:
                if f in ("pupil", "iris") and getattr(ann, f) is None:
                    gt_present[f].append(False)
                else:
                    gt_present[f].append(not visible_region(ann, f, w, h).is_empty)
        else:
            for f in IOU_FEATURES:
                gt_present[f].append(False)
        for f in IOU_FEATURES:
            model_present[f].append(not masks[f].is_empty)
        overlaps.append(overlap_fraction(masks["iris"], masks["sclera"]))

    features: dict[str, FeatureMetrics] = {}
    has_cr = any(np.any(f.labels & 0x01) for f in archive.frames)
    for feat in ("cr",) if has_cr else ():
        sig = signals[feat]
        features[feat] = FeatureMetrics(
            rms_s2s=rms_s2s(sig, archive.frame_rate, config.window_ms),
            loss_fraction=sig.loss_fraction,
        )
    for feat in IOU_FEATURES:
        sig = signals[feat]
        counts = confusion(gt_present[feat], model_present[feat])
        fa, miss = counts.fa_rate, counts.miss_rate
        present = np.asarray(gt_present[feat], dtype=bool)
        loss = float(np.mean(sig.lost[present])) if present.any() else None
        features[feat] = FeatureMetrics(
            miou=_mean_defined(ious[feat]),
            rms_s2s=None
            if feat == "sclera"
            else rms_s2s(sig, archive.frame_rate, config.window_ms),
            loss_fraction=loss,
            fa_rate=fa,
            miss_rate=miss,
            youden_j=None if fa is None or miss is None else youdens_j(miss, fa),
        )
    return VideoMetrics(
        video_id=archive.video_id,
        features=features,
        eye_opening_miou=_mean_defined(opening_ious),
        iris_sclera_overlap=_mean_defined(overlaps),
    )


def _mean_sem(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    out = {"mean": float(arr.mean()), "n": int(arr.size)}
    out["sem"] = (
        float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else None
    )
    return out


def summarize(videos: Sequence[VideoMetrics]) -> dict:
    """Dataset-level mean and SEM across videos for every defined metric."""
    out: dict = {"features": {}, "eye_opening_miou": None, "iris_sclera_overlap": None}
    feature_names = sorted({name for v in videos for name in v.features})
    metric_names = ("miou", "rms_s2s", "loss_fraction", "fa_rate", "miss_rate", "youden_j")
    for feat in feature_names:
        entry = {}
        for metric in metric_names:
            vals = [
                getattr(v.features[feat], metric)
                for v in videos
                if feat in v.features and getattr(v.features[feat], metric) is not None
            ]
            entry[metric] = _mean_sem(vals) if vals else None
        out["features"][feat] = entry
    for attr in ("eye_opening_miou", "iris_sclera_overlap"):
        vals = [getattr(v, attr) for v in videos if getattr(v, attr) is not None]
        out[attr] = _mean_sem(vals) if vals else None
    return out


def reference_presence_rates() -> list[dict]:
    """Published per-dataset (fa, miss, J) triples shipped as an
    internal-consistency fixture for the J = (1 - miss) - fa identity."""
    text = resources.files("eyeseg_eval").joinpath("data/reference_presence_rates.json").read_text("utf-8")
    return json.loads(text)
