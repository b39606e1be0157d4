"""Shared synthetic fixtures for CLI and acceptance tests."""

import math

from eyeseg_eval.annotations import AnnotationTrack, FrameAnnotation
from eyeseg_eval.geom import Ellipse, Point2D, Polygon


def synthetic_eyelid() -> Polygon:
    return Polygon(
        [
            Point2D(22, 38),
            Point2D(58, 20),
            Point2D(112, 22),
            Point2D(142, 42),
            Point2D(136, 86),
            Point2D(60, 97),
            Point2D(24, 78),
        ]
    )


def synthetic_track(n_frames: int = 200, absent_every: int = 40) -> AnnotationTrack:
    """Drifting concentric pupil/iris inside a fixed eyelid; every
    `absent_every`-th frame is fully unannotated (closed eye)."""
    width, height, fps = 160, 120, 100.0
    eyelid = synthetic_eyelid()
    frames = []
    for i in range(n_frames):
        if absent_every and i % absent_every == absent_every - 1:
            frames.append(FrameAnnotation(i))
            continue
        cx = 80 + 6 * math.sin(2 * math.pi * i / 50)
        cy = 60 + 3 * math.cos(2 * math.pi * i / 50)
        frames.append(
            FrameAnnotation(
                i,
                pupil=Ellipse(Point2D(cx, cy), 7, 6.5, 0.2),
                iris=Ellipse(Point2D(cx, cy), 22, 20, 0.1),
                eyelid=eyelid,
            )
        )
    return AnnotationTrack("synthetic", width, height, fps, tuple(frames))
