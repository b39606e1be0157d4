"""Ground-truth-driven mock segmenter.

Rasterizes the eyelid-clipped ground truth of every frame into mask bits and
optionally perturbs it (dilation, seeded jitter, seeded dropout). Lets the
whole evaluation pipeline run with no model: unperturbed output must score
perfectly, perturbed output provides known-degradation fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .annotations import AnnotationTrack, visible_region
from .maskio import FEATURE_BITS, MaskArchive, MaskFrame

GT_FEATURES = ("pupil", "iris", "sclera")  # no CR annotation exists in the GT

_DILATE_STRUCTURE = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class Perturbation:
    kind: str = "none"  # none | dilate | jitter | dropout
    amount: float = 0.0  # dilate: k px; jitter: sigma px; dropout: probability

    def __post_init__(self) -> None:
        if self.kind not in ("none", "dilate", "jitter", "dropout"):
            raise ValueError(f"unknown perturbation {self.kind!r}")
        if self.kind == "dilate" and not (float(self.amount).is_integer() and self.amount >= 1):
            raise ValueError(f"dilate needs an integer k >= 1, got {self.amount}")
        if self.kind == "jitter" and self.amount <= 0:
            raise ValueError(f"jitter needs sigma > 0, got {self.amount}")
        if self.kind == "dropout" and not (0.0 <= self.amount <= 1.0):
            raise ValueError(f"dropout needs p in [0, 1], got {self.amount}")


def parse_perturbation(spec: str) -> Perturbation:
    """Parse 'none', 'dilate:K', 'jitter:SIGMA' or 'dropout:P'."""
    if spec == "none":
        return Perturbation()
    if ":" not in spec:
        raise ValueError(f"bad perturbation {spec!r}; expected kind:amount")
    kind, _, amount = spec.partition(":")
    return Perturbation(kind, float(amount))


def _shift(mask: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Translate a boolean mask, dropping pixels pushed off the grid."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    src_x0, src_x1 = max(0, -dx), min(w, w - dx)
    src_y0, src_y1 = max(0, -dy), min(h, h - dy)
    if src_x0 >= src_x1 or src_y0 >= src_y1:
        return out
    out[src_y0 + dy : src_y1 + dy, src_x0 + dx : src_x1 + dx] = mask[
        src_y0:src_y1, src_x0:src_x1
    ]
    return out


def mock_segment_track(
    track: AnnotationTrack,
    perturbation: Perturbation | None = None,
    seed: int = 0,
) -> MaskArchive:
    """Per frame: feature bits = rasterized clipped ground truth, perturbed.

    RNG draw order is fixed for reproducibility: one uniform per frame for
    dropout; one (dx, dy) normal pair per feature per frame for jitter, drawn
    in pupil, iris, sclera order even when a feature is absent.
    """
    pert = perturbation or Perturbation()
    rng = np.random.default_rng(seed)
    w, h = track.width, track.height
    frames = []
    for ann in track.frames:
        labels = np.zeros((h, w), dtype=np.uint8)
        if pert.kind == "dropout" and rng.random() < pert.amount:
            frames.append(MaskFrame(ann.frame_index, labels))
            continue
        for feature in GT_FEATURES:
            offsets = None
            if pert.kind == "jitter":
                offsets = rng.normal(0.0, pert.amount, size=2)
            if ann.eyelid is None:
                continue
            if feature in ("pupil", "iris") and getattr(ann, feature) is None:
                continue
            mask = visible_region(ann, feature, w, h).mask
            if pert.kind == "dilate":
                mask = ndimage.binary_dilation(
                    mask, structure=_DILATE_STRUCTURE, iterations=int(pert.amount)
                )
            elif pert.kind == "jitter":
                dx = int(np.rint(offsets[0]))
                dy = int(np.rint(offsets[1]))
                mask = _shift(np.asarray(mask), dx, dy)
            labels[mask] |= FEATURE_BITS[feature]
        frames.append(MaskFrame(ann.frame_index, labels))
    return MaskArchive(track.video_id, w, h, track.frame_rate, tuple(frames))
