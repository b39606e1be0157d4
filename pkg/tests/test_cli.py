import json
import subprocess
import sys

import numpy as np
import pytest

from eyeseg_eval.annotations import serialize_annotation_track
from eyeseg_eval.cli import main
from eyeseg_eval.maskio import read_mask_archive

from util import synthetic_track


@pytest.fixture()
def track_path(tmp_path):
    track = synthetic_track(n_frames=40, absent_every=25)
    p = tmp_path / "track.jsonl"
    with open(p, "w", encoding="utf-8") as fh:
        serialize_annotation_track(track, fh)
    return p


def run(*argv):
    return main([str(a) for a in argv])


class TestImport:
    def write_teyed(self, tmp_path):
        pupil = tmp_path / "p.txt"
        iris = tmp_path / "i.txt"
        lid = tmp_path / "l.txt"
        pupil.write_text("FRAME;ANGLE;CX;CY;W;H\n1;0;80;60;16;14\n2;0;81;60;16;14\n")
        iris.write_text("FRAME;ANGLE;CX;CY;W;H\n1;0;80;60;44;40\n2;0;81;60;44;40\n")
        lid.write_text("1;20;20;140;20;140;100;20;100\n2;20;20;140;20;140;100;20;100\n")
        return pupil, iris, lid

    def test_valid_triple(self, tmp_path, capsys):
        pupil, iris, lid = self.write_teyed(tmp_path)
        out = tmp_path / "track.jsonl"
        code = run(
            "import", "--pupil", pupil, "--iris", iris, "--eyelid", lid,
            "--video-id", "v1", "--width", 160, "--height", 120, "--fps", 25,
            "--out", out,
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3  # header + 2 frames
        assert "imported 2 frames" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            run(
                "import", "--pupil", tmp_path / "absent.txt", "--iris", tmp_path / "absent.txt",
                "--eyelid", tmp_path / "absent.txt", "--video-id", "v", "--width", 10,
                "--height", 10, "--fps", 1, "--out", tmp_path / "o.jsonl",
            )
        assert exc.value.code == 2
        assert "absent.txt" in capsys.readouterr().err

    def test_empty_files_warn_exit_0(self, tmp_path, capsys):
        for name in ("p.txt", "i.txt", "l.txt"):
            (tmp_path / name).write_text("")
        out = tmp_path / "track.jsonl"
        code = run(
            "import", "--pupil", tmp_path / "p.txt", "--iris", tmp_path / "i.txt",
            "--eyelid", tmp_path / "l.txt", "--video-id", "v", "--width", 10,
            "--height", 10, "--fps", 1, "--out", out,
        )
        assert code == 0
        assert "warning" in capsys.readouterr().err
        assert len(out.read_text().strip().splitlines()) == 1  # header only


class TestGenPrompts:
    def test_prompt_file_has_11_points(self, track_path, tmp_path):
        out = tmp_path / "prompts.json"
        assert run("gen-prompts", track_path, "--frame", 0, "--out", out) == 0
        data = json.loads(out.read_text())
        assert data["frame"] == 0
        assert len(data["points"]) == 11

    def test_missing_feature_named(self, track_path, tmp_path, capsys):
        # frame 24 is the closed-eye frame (absent annotations)
        code = run("gen-prompts", track_path, "--frame", 24, "--out", tmp_path / "p.json")
        assert code == 1
        assert "pupil" in capsys.readouterr().err

    def test_byte_identical_output(self, track_path, tmp_path):
        out1 = tmp_path / "a.json"
        out2 = tmp_path / "b.json"
        run("gen-prompts", track_path, "--frame", 0, "--out", out1)
        run("gen-prompts", track_path, "--frame", 0, "--out", out2)
        assert out1.read_bytes() == out2.read_bytes()


class TestMockSegment:
    def test_archive_readable_and_deterministic(self, track_path, tmp_path):
        out1 = tmp_path / "m1"
        out2 = tmp_path / "m2"
        assert run("mock-segment", track_path, "--out", out1, "--perturb", "jitter:1.5", "--seed", 9) == 0
        assert run("mock-segment", track_path, "--out", out2, "--perturb", "jitter:1.5", "--seed", 9) == 0
        archive = read_mask_archive(out1)
        assert len(archive.frames) == 40
        for p1 in sorted(out1.iterdir()):
            assert p1.read_bytes() == (out2 / p1.name).read_bytes()

    def test_different_seed_differs(self, track_path, tmp_path):
        run("mock-segment", track_path, "--out", tmp_path / "a", "--perturb", "dropout:0.5", "--seed", 1)
        run("mock-segment", track_path, "--out", tmp_path / "b", "--perturb", "dropout:0.5", "--seed", 2)
        blobs_a = b"".join(p.read_bytes() for p in sorted((tmp_path / "a").glob("*.pgm")))
        blobs_b = b"".join(p.read_bytes() for p in sorted((tmp_path / "b").glob("*.pgm")))
        assert blobs_a != blobs_b

    def test_bad_perturb_spec(self, track_path, tmp_path, capsys):
        assert run("mock-segment", track_path, "--out", tmp_path / "x", "--perturb", "blur:3") == 1
        assert "perturbation" in capsys.readouterr().err


class TestExtract:
    def test_signal_csv(self, track_path, tmp_path):
        archive_dir = tmp_path / "masks"
        run("mock-segment", track_path, "--out", archive_dir)
        out = tmp_path / "signals.csv"
        assert run("extract", archive_dir, "--out", out) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "frame,feature,cx,cy,area,lost"
        assert len(lines) == 1 + 4 * 40  # cr, pupil, iris, sclera x frames


class TestEvaluate:
    def test_perfect_metrics_summary(self, track_path, tmp_path):
        archive_dir = tmp_path / "masks"
        run("mock-segment", track_path, "--out", archive_dir)
        out = tmp_path / "eval"
        assert run("evaluate", "--pair", track_path, archive_dir, "--out", out) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["toolkit_version"]
        video = summary["videos"]["synthetic"]
        for feat in ("pupil", "iris", "sclera"):
            m = video["features"][feat]
            assert m["miou"] == 1.0
            assert m["fa_rate"] == 0.0
            assert m["miss_rate"] == 0.0
            assert m["youden_j"] == 1.0
            assert m["loss_fraction"] == 0.0
        assert video["eye_opening_miou"] == 1.0
        assert (out / "synthetic.csv").exists()

    def test_dropout_everything_lost(self, track_path, tmp_path):
        archive_dir = tmp_path / "masks"
        run("mock-segment", track_path, "--out", archive_dir, "--perturb", "dropout:1.0")
        out = tmp_path / "eval"
        assert run("evaluate", "--pair", track_path, archive_dir, "--out", out) == 0
        summary = json.loads((out / "summary.json").read_text())
        video = summary["videos"]["synthetic"]
        for feat in ("pupil", "iris", "sclera"):
            assert video["features"][feat]["loss_fraction"] == 1.0
            assert video["features"][feat]["miou"] == 0.0
            assert video["features"][feat]["miss_rate"] == 1.0

    def test_frame_count_mismatch(self, track_path, tmp_path, capsys):
        archive_dir = tmp_path / "masks"
        run("mock-segment", track_path, "--out", archive_dir)
        # drop the last frame and patch the manifest count
        frames = sorted(archive_dir.glob("frame_*.pgm"))
        frames[-1].unlink()
        manifest = json.loads((archive_dir / "manifest.json").read_text())
        manifest["frame_count"] = len(frames) - 1
        (archive_dir / "manifest.json").write_text(json.dumps(manifest))
        code = run("evaluate", "--pair", track_path, archive_dir, "--out", tmp_path / "e")
        assert code == 1
        assert "ConsistencyError" in capsys.readouterr().err

    def test_byte_identical_reports(self, track_path, tmp_path):
        archive_dir = tmp_path / "masks"
        run("mock-segment", track_path, "--out", archive_dir, "--perturb", "jitter:0.8", "--seed", 3)
        out1 = tmp_path / "e1"
        out2 = tmp_path / "e2"
        run("evaluate", "--pair", track_path, archive_dir, "--out", out1)
        run("evaluate", "--pair", track_path, archive_dir, "--out", out2)
        a = (out1 / "summary.json").read_text().replace(str(out1), "OUT")
        b = (out2 / "summary.json").read_text().replace(str(out2), "OUT")
        assert a == b
        assert (out1 / "synthetic.csv").read_bytes() == (out2 / "synthetic.csv").read_bytes()


class TestReport:
    def test_dataset_summary_and_plot_tsv(self, track_path, tmp_path):
        archive_dir = tmp_path / "masks"
        run("mock-segment", track_path, "--out", archive_dir)
        eval_dir = tmp_path / "eval"
        run("evaluate", "--pair", track_path, archive_dir, "--out", eval_dir)
        out = tmp_path / "report"
        assert run("report", eval_dir / "summary.json", "--out", out) == 0
        summary = json.loads((out / "dataset_summary.json").read_text())
        assert summary["n_videos"] == 1
        assert summary["dataset"]["features"]["pupil"]["miou"]["mean"] == 1.0
        tsv = (out / "plot_data.tsv").read_text().splitlines()
        assert tsv[0] == "video_id\tfeature\tmetric\tvalue"
        assert any("\trms_s2s\t" in line for line in tsv)
        assert any("\tloss_fraction\t" in line for line in tsv)


def test_installed_entry_point_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "eyeseg_eval.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "eyeseg-eval" in proc.stdout


class TestPerturbedPipeline:
    def test_dilate_degrades_but_stays_valid(self, track_path, tmp_path):
        archive_dir = tmp_path / "masks"
        run("mock-segment", track_path, "--out", archive_dir, "--perturb", "dilate:1")
        out = tmp_path / "eval"
        assert run("evaluate", "--pair", track_path, archive_dir, "--out", out) == 0
        video = json.loads((out / "summary.json").read_text())["videos"]["synthetic"]
        for feat in ("pupil", "iris", "sclera"):
            assert 0.0 < video["features"][feat]["miou"] < 1.0

    def test_parallel_jobs_match_sequential(self, track_path, tmp_path):
        a1 = tmp_path / "m1"
        a2 = tmp_path / "m2"
        run("mock-segment", track_path, "--out", a1)
        run("mock-segment", track_path, "--out", a2, "--perturb", "jitter:0.5", "--seed", 4)
        # second pair needs a distinct video id for aggregation
        manifest = json.loads((a2 / "manifest.json").read_text())
        manifest["video_id"] = "synthetic2"
        (a2 / "manifest.json").write_text(json.dumps(manifest))
        track2 = tmp_path / "track2.jsonl"
        text = track_path.read_text().replace('"synthetic"', '"synthetic2"')
        track2.write_text(text)

        out_seq = tmp_path / "seq"
        out_par = tmp_path / "par"
        run("evaluate", "--pair", track_path, a1, "--pair", track2, a2, "--out", out_seq, "--jobs", 1)
        run("evaluate", "--pair", track_path, a1, "--pair", track2, a2, "--out", out_par, "--jobs", 2)
        a = (out_seq / "summary.json").read_text().replace(str(out_seq), "OUT").replace('"jobs": 1', '"jobs": N')
        b = (out_par / "summary.json").read_text().replace(str(out_par), "OUT").replace('"jobs": 2', '"jobs": N')
        assert a == b
