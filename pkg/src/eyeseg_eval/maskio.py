"""Bit-exact per-frame mask archives.

Each frame is a binary P5 graymap whose pixel value is a feature bitfield
(bit 0 = CR, bit 1 = pupil, bit 2 = iris, bit 3 = sclera; bits 4-7 reserved
and must be zero). Features may overlap, hence a bitfield rather than a class
index. A manifest.json carries video id, dimensions, frame rate and count.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, MissingFrame
from .geom import PixelSet

FEATURE_BITS = {"cr": 0x01, "pupil": 0x02, "iris": 0x04, "sclera": 0x08}
RESERVED_MASK = 0xF0

_FRAME_RE = re.compile(r"^frame_(\d{8})\.pgm$")


@dataclass(frozen=True, eq=False)
class MaskFrame:
    frame_index: int
    labels: np.ndarray  # uint8, shape (height, width)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MaskFrame):
            return NotImplemented
        return self.frame_index == other.frame_index and bool(
            np.array_equal(self.labels, other.labels)
        )

    def __post_init__(self) -> None:
        arr = np.asarray(self.labels)
        if arr.dtype != np.uint8 or arr.ndim != 2:
            raise ValueError("labels must be a 2-D uint8 array")
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")
        if np.any(arr & RESERVED_MASK):
            raise ValueError("reserved label bits 4-7 set")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class MaskArchive:
    video_id: str
    width: int
    height: int
    frame_rate: float
    frames: tuple[MaskFrame, ...]

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"bad dimensions {self.width}x{self.height}")
        if not (self.frame_rate > 0 and math.isfinite(self.frame_rate)):
            raise ValueError(f"frame_rate must be > 0, got {self.frame_rate}")
        prev = -1
        for f in self.frames:
            if f.frame_index <= prev:
                raise ValueError("frame indices must be strictly increasing")
            if (f.width, f.height) != (self.width, self.height):
                raise ValueError(
                    f"frame {f.frame_index} is {f.width}x{f.height}, "
                    f"archive is {self.width}x{self.height}"
                )
            prev = f.frame_index


def feature_mask(frame: MaskFrame, feature: str) -> PixelSet:
    """Pixels whose bit for the given feature is set."""
    try:
        bit = FEATURE_BITS[feature]
    except KeyError:
        raise ValueError(f"unknown feature {feature!r}") from None
    return PixelSet._wrap((frame.labels & bit) != 0)


def write_mask_archive(archive: MaskArchive, directory: str | Path) -> Path:
    """Write one frame_%08d.pgm per frame plus manifest.json; returns the
    manifest path. Output is byte-deterministic for a given archive."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for frame in archive.frames:
        header = f"P5\n{archive.width} {archive.height}\n255\n".encode("ascii")
        path = out / f"frame_{frame.frame_index:08d}.pgm"
        path.write_bytes(header + frame.labels.tobytes())
    manifest = {
        "video_id": archive.video_id,
        "width": archive.width,
        "height": archive.height,
        "frame_rate": archive.frame_rate,
        "frame_count": len(archive.frames),
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", "utf-8")
    return manifest_path


def _read_pgm(path: Path) -> tuple[int, int, bytes]:
    data = path.read_bytes()
    # header: magic, width, height, maxval as whitespace-separated tokens
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":  # comment to end of line
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary P5 graymap")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError(f"{path}: bad header: {exc}") from exc
    if maxval != 255:
        raise FormatError(f"{path}: expected maxval 255, got {maxval}")
    pos += 1  # single whitespace after maxval
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise FormatError(f"{path}: truncated raster")
    return width, height, raster


def read_mask_archive(directory: str | Path) -> MaskArchive:
    """Read and validate an archive written by write_mask_archive."""
    root = Path(directory)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise FormatError(f"{manifest_path}: missing manifest")
    try:
        manifest = json.loads(manifest_path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{manifest_path}: {exc}") from exc
    try:
        video_id = str(manifest["video_id"])
        width = int(manifest["width"])
        height = int(manifest["height"])
        frame_rate = float(manifest["frame_rate"])
        frame_count = int(manifest["frame_count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{manifest_path}: bad manifest: {exc}") from exc

    entries = sorted(
        (int(m.group(1)), p)
        for p in root.iterdir()
        if (m := _FRAME_RE.match(p.name))
    )
    if len(entries) != frame_count:
        raise MissingFrame(
            f"{root}: manifest announces {frame_count} frames, found {len(entries)}"
        )
    frames = []
    for frame_index, path in entries:
        w, h, raster = _read_pgm(path)
        if (w, h) != (width, height):
            raise FormatError(f"{path}: frame is {w}x{h}, archive is {width}x{height}")
        labels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
        if np.any(labels & RESERVED_MASK):
            raise FormatError(f"{path}: reserved label bits 4-7 set")
        frames.append(MaskFrame(frame_index, labels))
    return MaskArchive(video_id, width, height, frame_rate, tuple(frames))
