import math

import numpy as np
import pytest

from eyeseg_eval.annotations import AnnotationTrack, FrameAnnotation, visible_region
from eyeseg_eval.errors import (
    ConsistencyError,
    DegenerateVariance,
    LengthMismatch,
    MissingAnnotation,
)
from eyeseg_eval.geom import Ellipse, PixelSet, Point2D, Polygon
from eyeseg_eval.maskio import MaskArchive, MaskFrame
from eyeseg_eval.metrics import (
    ConfusionCounts,
    EvalConfig,
    FrameIoU,
    check_consistency,
    confusion,
    evaluate_video,
    frame_iou_suite,
    iou,
    overlap_fraction,
    paired_t,
    reference_presence_rates,
    regularized_incomplete_beta,
    rms_s2s,
    summarize,
    youdens_j,
)
from eyeseg_eval.signals import FeatureSignal


def make_signal(xs, ys=None, lost=None, feature="pupil"):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.zeros_like(xs) if ys is None else np.asarray(ys, dtype=np.float64)
    lost = np.zeros(len(xs), dtype=bool) if lost is None else np.asarray(lost, dtype=bool)
    x = xs.copy()
    y = ys.copy()
    x[lost] = np.nan
    y[lost] = np.nan
    return FeatureSignal(
        feature=feature,
        frames=np.arange(len(xs), dtype=np.int64),
        x=x,
        y=y,
        areas=np.ones(len(xs), dtype=np.int64),
        lost=lost,
    )


def rect(x0, y0, x1, y1):
    return Polygon([Point2D(x0, y0), Point2D(x1, y0), Point2D(x1, y1), Point2D(x0, y1)])


class TestRmsS2S:
    def test_constant_signal(self):
        sig = make_signal([5.0] * 300, [3.0] * 300)
        assert rms_s2s(sig, 1000.0) == 0.0

    def test_alternating_signal_exact(self):
        d = 0.75
        xs = [d if i % 2 else -d for i in range(400)]
        sig = make_signal(xs)
        assert rms_s2s(sig, 1000.0) == 2 * d

    def test_gaussian_noise_two_sigma(self):
        rng = np.random.default_rng(42)
        sigma = 0.2
        n = 100_000
        sig = make_signal(rng.normal(0, sigma, n), rng.normal(0, sigma, n))
        value = rms_s2s(sig, 1000.0, window_ms=200.0)
        assert value == pytest.approx(2 * sigma, rel=0.02)

    def test_lost_windows_excluded(self):
        xs = [0.0, 1.0, 3.0, 6.0, 10.0, 15.0]
        lost = [False, False, True, False, False, False]
        sig = make_signal(xs, lost=lost)
        # only the window over samples 3..5 has no lost sample
        assert rms_s2s(sig, 1000.0, window_ms=3.0) == pytest.approx(math.sqrt(41 / 2))

    def test_all_windows_lost_returns_none(self):
        sig = make_signal([0.0, 1.0, 2.0], lost=[False, True, False])
        assert rms_s2s(sig, 1000.0, window_ms=3.0) is None

    def test_short_signal_returns_none(self):
        sig = make_signal([0.0, 1.0])
        assert rms_s2s(sig, 1000.0, window_ms=200.0) is None

    def test_window_under_two_samples_rejected(self):
        sig = make_signal([0.0] * 100)
        with pytest.raises(ValueError):
            rms_s2s(sig, 1000.0, window_ms=1.0)

    def test_translation_invariance(self):
        rng = np.random.default_rng(1)
        xs = rng.normal(0, 1, 500)
        ys = rng.normal(0, 1, 500)
        v0 = rms_s2s(make_signal(xs, ys), 1000.0)
        v1 = rms_s2s(make_signal(xs + 123.0, ys - 77.0), 1000.0)
        assert v1 == pytest.approx(v0, rel=1e-9)

    def test_scaling_linearity(self):
        rng = np.random.default_rng(2)
        xs = rng.normal(0, 1, 500)
        ys = rng.normal(0, 1, 500)
        v0 = rms_s2s(make_signal(xs, ys), 1000.0)
        v1 = rms_s2s(make_signal(3 * xs, 3 * ys), 1000.0)
        assert v1 == pytest.approx(3 * v0, rel=1e-9)


class TestIoU:
    def test_identical_nonempty(self):
        a = PixelSet.from_coords(8, 8, [(1, 1), (2, 2)])
        assert iou(a, a) == 1.0

    def test_disjoint(self):
        a = PixelSet.from_coords(8, 8, [(1, 1)])
        b = PixelSet.from_coords(8, 8, [(5, 5)])
        assert iou(a, b) == 0.0

    def test_hand_counted_third(self):
        a = PixelSet.from_coords(8, 8, [(1, 1), (2, 1), (1, 2), (2, 2)])
        b = PixelSet.from_coords(8, 8, [(2, 1), (3, 1), (2, 2), (3, 2)])
        assert iou(a, b) == pytest.approx(1 / 3)

    def test_both_empty_undefined(self):
        assert iou(PixelSet.empty(4, 4), PixelSet.empty(4, 4)) is None

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = PixelSet(rng.random((10, 10)) < 0.4)
            b = PixelSet(rng.random((10, 10)) < 0.4)
            assert iou(a, b) == iou(b, a)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            iou(PixelSet.empty(4, 4), PixelSet.empty(5, 4))


def build_annotation(w=64, h=48):
    return FrameAnnotation(
        frame_index=0,
        pupil=Ellipse(Point2D(32, 24), 6, 6),
        iris=Ellipse(Point2D(32, 24), 16, 16),
        eyelid=rect(4, 4, 60, 44),
    )


def gt_labels(ann, w=64, h=48):
    labels = np.zeros((h, w), dtype=np.uint8)
    labels[visible_region(ann, "pupil", w, h).mask] |= 2
    labels[visible_region(ann, "iris", w, h).mask] |= 4
    labels[visible_region(ann, "sclera", w, h).mask] |= 8
    return labels


class TestFrameIoUSuite:
    def test_perfect_model(self):
        ann = build_annotation()
        frame = MaskFrame(0, gt_labels(ann))
        suite = frame_iou_suite(frame, ann)
        assert suite.pupil == 1.0
        assert suite.iris == 1.0
        assert suite.sclera == 1.0
        assert suite.eye_opening == 1.0

    def test_empty_model_all_zero(self):
        ann = build_annotation()
        frame = MaskFrame(0, np.zeros((48, 64), dtype=np.uint8))
        suite = frame_iou_suite(frame, ann)
        assert suite.pupil == 0.0
        assert suite.iris == 0.0
        assert suite.sclera == 0.0
        assert suite.eye_opening == 0.0

    def test_dilated_model_matches_per_pixel_oracle(self):
        from scipy import ndimage

        ann = build_annotation()
        labels = gt_labels(ann)
        dilated = np.zeros_like(labels)
        for bit in (2, 4, 8):
            grown = ndimage.binary_dilation(labels & bit != 0, structure=np.ones((3, 3)))
            dilated[grown] |= bit
        frame = MaskFrame(0, dilated)
        suite = frame_iou_suite(frame, ann)

        # independent per-pixel counting oracle, Chebyshev-1 dilation by hand
        def oracle(model_bit, gt_mask):
            src = labels & model_bit != 0
            h, w = src.shape
            inter = union = 0
            for y in range(h):
                for x in range(w):
                    on = any(
                        src[yy, xx]
                        for yy in range(max(0, y - 1), min(h, y + 2))
                        for xx in range(max(0, x - 1), min(w, x + 2))
                    )
                    g = gt_mask[y, x]
                    inter += on and g
                    union += on or g
            return inter / union

        assert suite.pupil == pytest.approx(
            oracle(2, visible_region(ann, "pupil", 64, 48).mask), abs=0
        )
        assert suite.iris == pytest.approx(
            oracle(4, visible_region(ann, "iris", 64, 48).mask), abs=0
        )

    def test_missing_eyelid(self):
        ann = FrameAnnotation(0, pupil=Ellipse(Point2D(5, 5), 2, 2))
        with pytest.raises(MissingAnnotation):
            frame_iou_suite(MaskFrame(0, np.zeros((48, 64), np.uint8)), ann)


class TestOverlapFraction:
    def test_disjoint(self):
        a = PixelSet.from_coords(8, 8, [(1, 1)])
        b = PixelSet.from_coords(8, 8, [(5, 5)])
        assert overlap_fraction(a, b) == 0.0

    def test_subset(self):
        iris = PixelSet.from_coords(8, 8, [(1, 1), (2, 2)])
        sclera = PixelSet.from_coords(8, 8, [(1, 1), (2, 2), (3, 3)])
        assert overlap_fraction(iris, sclera) == 1.0

    def test_half(self):
        iris = PixelSet.from_coords(8, 8, [(1, 1), (2, 2)])
        sclera = PixelSet.from_coords(8, 8, [(2, 2), (3, 3)])
        assert overlap_fraction(iris, sclera) == 0.5

    def test_empty_iris_undefined(self):
        assert overlap_fraction(PixelSet.empty(4, 4), PixelSet.empty(4, 4)) is None


class TestConfusion:
    def test_always_agrees(self):
        counts = confusion([True, False, True], [True, False, True])
        assert counts.fa_rate == 0.0
        assert counts.miss_rate == 0.0

    def test_always_present(self):
        counts = confusion([True, False, True, False], [True, True, True, True])
        assert counts.miss_rate == 0.0
        assert counts.fa_rate == 1.0

    def test_hand_counted(self):
        gt = [True] * 6 + [False] * 4
        model = [True] * 6 + [True, True, False, False]
        counts = confusion(gt, model)
        assert counts == ConfusionCounts(6, 0, 2, 2)
        assert counts.fa_rate == 0.5

    def test_partition(self):
        gt = [True, False, True, False, True]
        model = [False, True, True, False, True]
        c = confusion(gt, model)
        assert c.hits + c.misses + c.false_alarms + c.correct_rejections == 5

    def test_undefined_rates(self):
        counts = confusion([True, True], [True, False])
        assert counts.fa_rate is None
        assert counts.miss_rate == 0.5

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion([True], [True, False])


class TestYoudensJ:
    def test_perfect(self):
        assert youdens_j(0.0, 0.0) == 1.0

    def test_indiscriminate(self):
        assert youdens_j(0.0, 1.0) == 0.0

    def test_published_triple(self):
        assert youdens_j(0.037, 0.065) == pytest.approx(0.898, abs=1e-12)

    def test_identity_on_reference_fixture(self):
        rows = reference_presence_rates()
        assert len(rows) == 28
        for row in rows:
            j = youdens_j(row["miss_rate"], row["fa_rate"])
            assert abs(row["youden_j"] - j) <= 0.0015, row

    def test_range_validation(self):
        with pytest.raises(ValueError):
            youdens_j(-0.1, 0.5)
        with pytest.raises(ValueError):
            youdens_j(0.1, 1.5)


class TestIncompleteBeta:
    def test_against_independent_reference(self):
        from scipy import special

        for a in (0.5, 1.0, 2.5, 10.0, 50.0):
            for b in (0.5, 1.0, 3.0, 25.0):
                for x in (0.0, 1e-6, 0.1, 0.37, 0.5, 0.9, 1 - 1e-6, 1.0):
                    mine = regularized_incomplete_beta(a, b, x)
                    ref = float(special.betainc(a, b, x))
                    assert abs(mine - ref) < 1e-9, (a, b, x)


class TestPairedT:
    def test_identical_samples_degenerate(self):
        with pytest.raises(DegenerateVariance):
            paired_t([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])

    def test_zero_mean_difference(self):
        res = paired_t([1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0])
        assert res.t == 0.0
        assert res.p == 1.0
        assert res.df == 3

    def test_six_pair_fixture_matches_frozen_oracle(self):
        # expected values computed beforehand with 50-digit arithmetic
        a = [12.1, 14.3, 9.8, 11.4, 13.0, 10.6]
        b = [11.6, 13.1, 10.2, 10.4, 12.2, 10.1]
        res = paired_t(a, b)
        assert res.df == 5
        assert res.t == pytest.approx(2.6144680219835705, abs=1e-6)
        assert res.p == pytest.approx(0.047413270063974786, abs=1e-6)

    def test_too_few_pairs(self):
        with pytest.raises(ValueError):
            paired_t([1.0], [2.0])


class TestEvaluateVideo:
    def build_pair(self, n_frames=5, fps=100.0):
        ann = build_annotation()
        frames_ann = tuple(
            FrameAnnotation(i, ann.pupil, ann.iris, ann.eyelid) for i in range(n_frames)
        )
        track = AnnotationTrack("v0", 64, 48, fps, frames_ann)
        labels = gt_labels(ann)
        archive = MaskArchive(
            "v0", 64, 48, fps, tuple(MaskFrame(i, labels) for i in range(n_frames))
        )
        return track, archive

    def test_perfect_pipeline(self):
        track, archive = self.build_pair()
        vm = evaluate_video(track, archive, EvalConfig())
        for feat in ("pupil", "iris", "sclera"):
            m = vm.features[feat]
            assert m.miou == 1.0
            assert m.fa_rate is None  # no GT-absent frames: denominator 0
            assert m.miss_rate == 0.0
            assert m.youden_j is None
            assert m.loss_fraction == 0.0
        assert vm.eye_opening_miou == 1.0
        assert "cr" not in vm.features  # no CR bits anywhere

    def test_perfect_pipeline_with_absent_frames(self):
        # a GT-absent frame (faithfully segmented as empty) defines fa = 0
        ann = build_annotation()
        closed = FrameAnnotation(3, None, None, None)
        frames_ann = tuple(
            FrameAnnotation(i, ann.pupil, ann.iris, ann.eyelid) for i in range(3)
        ) + (closed,)
        track = AnnotationTrack("v0", 64, 48, 100.0, frames_ann)
        labels = gt_labels(ann)
        frames = tuple(MaskFrame(i, labels) for i in range(3)) + (
            MaskFrame(3, np.zeros((48, 64), np.uint8)),
        )
        archive = MaskArchive("v0", 64, 48, 100.0, frames)
        vm = evaluate_video(track, archive, EvalConfig())
        for feat in ("pupil", "iris", "sclera"):
            m = vm.features[feat]
            assert m.miou == 1.0
            assert m.fa_rate == 0.0
            assert m.miss_rate == 0.0
            assert m.youden_j == 1.0
            assert m.loss_fraction == 0.0  # GT-absent frame not counted as loss

    def test_frame_count_mismatch(self):
        track, archive = self.build_pair()
        short = MaskArchive("v0", 64, 48, 100.0, archive.frames[:-1])
        with pytest.raises(ConsistencyError):
            check_consistency(track, short)

    def test_summarize_mean_and_sem(self):
        track, archive = self.build_pair()
        vm = evaluate_video(track, archive)
        summary = summarize([vm, vm])
        pupil = summary["features"]["pupil"]
        assert pupil["miou"]["mean"] == 1.0
        assert pupil["miou"]["sem"] == 0.0
        assert summary["eye_opening_miou"]["n"] == 2

    def test_miou_excludes_undefined_frames(self):
        # frames where GT and model are both empty do not enter the mean
        ann_present = build_annotation()
        ann_absent = FrameAnnotation(1, None, None, ann_present.eyelid)
        track = AnnotationTrack(
            "v0", 64, 48, 100.0,
            (FrameAnnotation(0, ann_present.pupil, ann_present.iris, ann_present.eyelid), ann_absent),
        )
        labels0 = gt_labels(ann_present)
        labels1 = np.zeros((48, 64), dtype=np.uint8)
        labels1[visible_region(ann_absent, "sclera", 64, 48).mask] |= 8
        archive = MaskArchive(
            "v0", 64, 48, 100.0, (MaskFrame(0, labels0), MaskFrame(1, labels1))
        )
        vm = evaluate_video(track, archive)
        # pupil IoU is defined only on frame 0 (frame 1: both sides empty)
        assert vm.features["pupil"].miou == 1.0
        assert vm.features["pupil"].fa_rate == 0.0


class TestIoUMonotonicity:
    def test_growing_intersection_with_fixed_union(self):
        # move pixels of the union from b-only into the intersection
        base = [(x, 0) for x in range(8)]
        a_members = [(x, 0) for x in range(4)]
        last = -1.0
        for k in range(1, 9):
            a = PixelSet.from_coords(8, 2, base[:k])
            b = PixelSet.from_coords(8, 2, base)
            value = iou(a, b)
            assert value > last
            last = value
        assert last == 1.0
