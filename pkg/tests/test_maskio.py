import numpy as np
import pytest

from eyeseg_eval.errors import FormatError, MissingFrame
from eyeseg_eval.maskio import (
    FEATURE_BITS,
    MaskArchive,
    MaskFrame,
    feature_mask,
    read_mask_archive,
    write_mask_archive,
)


def random_archive(seed=0, n_frames=5, width=17, height=11):
    rng = np.random.default_rng(seed)
    frames = tuple(
        MaskFrame(i, (rng.integers(0, 16, (height, width))).astype(np.uint8))
        for i in range(n_frames)
    )
    return MaskArchive("vid", width, height, 120.0, frames)


class TestFrameValidation:
    def test_reserved_bits_rejected(self):
        labels = np.zeros((4, 4), dtype=np.uint8)
        labels[0, 0] = 16
        with pytest.raises(ValueError):
            MaskFrame(0, labels)

    def test_dimension_mismatch_rejected(self):
        f0 = MaskFrame(0, np.zeros((4, 4), dtype=np.uint8))
        f1 = MaskFrame(1, np.zeros((4, 5), dtype=np.uint8))
        with pytest.raises(ValueError):
            MaskArchive("v", 4, 4, 30.0, (f0, f1))

    def test_monotonic_frames_required(self):
        f0 = MaskFrame(1, np.zeros((4, 4), dtype=np.uint8))
        f1 = MaskFrame(1, np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(ValueError):
            MaskArchive("v", 4, 4, 30.0, (f0, f1))


class TestEncoding:
    def test_overlap_byte_value(self, tmp_path):
        labels = np.zeros((2, 3), dtype=np.uint8)
        labels[0, 0] = FEATURE_BITS["iris"] | FEATURE_BITS["sclera"]
        archive = MaskArchive("v", 3, 2, 30.0, (MaskFrame(0, labels),))
        write_mask_archive(archive, tmp_path)
        data = (tmp_path / "frame_00000000.pgm").read_bytes()
        raster = data.split(b"255\n", 1)[1]
        assert raster[0] == 0b00001100 == 12

    def test_empty_frame_all_zero(self, tmp_path):
        archive = MaskArchive("v", 3, 2, 30.0, (MaskFrame(0, np.zeros((2, 3), np.uint8)),))
        write_mask_archive(archive, tmp_path)
        raster = (tmp_path / "frame_00000000.pgm").read_bytes().split(b"255\n", 1)[1]
        assert raster == b"\x00" * 6


class TestRoundTrip:
    def test_write_read_write_byte_identical(self, tmp_path):
        archive = random_archive(seed=3)
        d1 = tmp_path / "a"
        d2 = tmp_path / "b"
        write_mask_archive(archive, d1)
        again = read_mask_archive(d1)
        assert again == archive
        write_mask_archive(again, d2)
        for p1 in sorted(d1.iterdir()):
            p2 = d2 / p1.name
            assert p1.read_bytes() == p2.read_bytes()

    def test_read_validates_reserved_bits(self, tmp_path):
        archive = random_archive(seed=1, n_frames=1)
        write_mask_archive(archive, tmp_path)
        p = tmp_path / "frame_00000000.pgm"
        data = bytearray(p.read_bytes())
        data[-1] = 16
        p.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            read_mask_archive(tmp_path)

    def test_missing_frame_detected(self, tmp_path):
        archive = random_archive(seed=2, n_frames=10)
        write_mask_archive(archive, tmp_path)
        (tmp_path / "frame_00000004.pgm").unlink()
        with pytest.raises(MissingFrame):
            read_mask_archive(tmp_path)

    def test_dimension_mismatch_detected(self, tmp_path):
        archive = random_archive(seed=4, n_frames=2)
        write_mask_archive(archive, tmp_path)
        header = b"P5\n5 5\n255\n"
        (tmp_path / "frame_00000001.pgm").write_bytes(header + b"\x00" * 25)
        with pytest.raises(FormatError):
            read_mask_archive(tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FormatError):
            read_mask_archive(tmp_path)


class TestFeatureMask:
    def test_overlapping_features(self):
        labels = np.zeros((5, 5), dtype=np.uint8)
        labels[3, 3] = 12  # iris + sclera
        frame = MaskFrame(0, labels)
        assert (3, 3) in feature_mask(frame, "iris")
        assert (3, 3) in feature_mask(frame, "sclera")
        assert (3, 3) not in feature_mask(frame, "pupil")

    def test_all_zero_frame(self):
        frame = MaskFrame(0, np.zeros((4, 4), np.uint8))
        for feature in FEATURE_BITS:
            assert feature_mask(frame, feature).is_empty

    def test_partition_count(self):
        frame = random_archive(seed=5, n_frames=1).frames[0]
        pupil = feature_mask(frame, "pupil")
        n_clear = int(np.sum((frame.labels & 2) == 0))
        assert len(pupil) + n_clear == frame.width * frame.height

    def test_unknown_feature(self):
        frame = MaskFrame(0, np.zeros((4, 4), np.uint8))
        with pytest.raises(ValueError):
            feature_mask(frame, "nose")
