"""Command-line orchestration: import, gen-prompts, mock-segment, extract,
evaluate, report.

Diagnostics go to stderr; data goes to files (or stdout with --stdout where
supported). Exit codes: 0 success, 1 failure, 2 missing input file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .annotations import (
    VideoMeta,
    import_teyed,
    parse_annotation_track,
    serialize_annotation_track,
)
from .errors import EyesegError
from .metrics import EvalConfig, VideoMetrics, evaluate_video, summarize
from .maskio import read_mask_archive, write_mask_archive
from .mockseg import mock_segment_track, parse_perturbation
from .prompts import assemble_prompt_roles, generate_prompt_points, prompt_set_to_json
from .signals import extract_signals, write_signals_csv

METRIC_NAMES = ("miou", "rms_s2s", "loss_fraction", "fa_rate", "miss_rate", "youden_j")


def _eprint(*args) -> None:
    print(*args, file=sys.stderr)


def _require_file(path: str) -> None:
    if not Path(path).exists():
        _eprint(f"error: no such file: {path}")
        raise SystemExit(2)


def _load_track(path: str):
    _require_file(path)
    with open(path, "r", encoding="utf-8") as fh:
        return parse_annotation_track(fh)


def _default_jobs() -> int:
    env = os.environ.get("EYESEG_EVAL_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            _eprint(f"warning: ignoring invalid EYESEG_EVAL_JOBS={env!r}")
    return 1


def _add_metric_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--mode", choices=("visual", "concept"), default="visual")
    sub.add_argument("--window-ms", type=float, default=200.0)
    sub.add_argument("--loss-factor", type=float, default=0.5)
    sub.add_argument("--loss-percentile", type=float, default=20.0)
    sub.add_argument("--adjacency", type=float, default=3.0)
    sub.add_argument("--min-area", type=float, default=25.0)
    sub.add_argument("--max-area", type=float, default=None)
    sub.add_argument("--min-fill", type=float, default=0.4)


def _eval_config(args: argparse.Namespace) -> EvalConfig:
    return EvalConfig(
        mode=args.mode,
        window_ms=args.window_ms,
        loss_factor=args.loss_factor,
        loss_percentile=args.loss_percentile,
        adjacency_radius=args.adjacency,
        shape_min_area=args.min_area,
        shape_max_area=args.max_area,
        shape_min_fill=args.min_fill,
    )


# ---------------------------------------------------------------- commands


def cmd_import(args: argparse.Namespace) -> int:
    for p in (args.pupil, args.iris, args.eyelid):
        _require_file(p)
    meta = VideoMeta(args.video_id, args.width, args.height, args.fps)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        track = import_teyed(args.pupil, args.iris, args.eyelid, meta)
    for w in caught:
        _eprint(f"warning: {w.message}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        serialize_annotation_track(track, fh)
    _eprint(f"imported {len(track.frames)} frames into {out}")
    return 0


def cmd_gen_prompts(args: argparse.Namespace) -> int:
    if not args.stdout and not args.out:
        _eprint("error: --out is required unless --stdout is given")
        return 1
    track = _load_track(args.track)
    try:
        ann = track.frame_by_index(args.frame)
    except KeyError as exc:
        _eprint(f"error: {exc}")
        return 1
    prompts = assemble_prompt_roles(
        generate_prompt_points(ann, margin=args.margin, iris_sample_count=args.samples)
    )
    for p in prompts.points:
        if not (0 <= p.location.x <= track.width and 0 <= p.location.y <= track.height):
            _eprint(f"error: prompt point {p} outside the {track.width}x{track.height} frame")
            return 1
    text = prompt_set_to_json(prompts)
    if args.stdout:
        sys.stdout.write(text)
    else:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, "utf-8")
        _eprint(f"wrote {len(prompts.points)} prompt points to {out}")
    return 0


def cmd_mock_segment(args: argparse.Namespace) -> int:
    track = _load_track(args.track)
    perturbation = parse_perturbation(args.perturb)
    archive = mock_segment_track(track, perturbation, seed=args.seed)
    manifest = write_mask_archive(archive, args.out)
    _eprint(f"wrote {len(archive.frames)} mask frames; manifest {manifest}")
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    _require_file(str(Path(args.archive) / "manifest.json"))
    archive = read_mask_archive(args.archive)
    config = _eval_config(args)
    signals = extract_signals(
        archive,
        mode=config.mode,
        criteria=config.criteria_for(archive.width, archive.height),
        adjacency_radius=config.adjacency_radius,
        loss_factor=config.loss_factor,
        loss_percentile=config.loss_percentile,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        write_signals_csv(signals, fh)
    _eprint(f"wrote signals for {len(archive.frames)} frames to {out}")
    return 0


def _evaluate_pair(track_path: str, archive_dir: str, config: EvalConfig) -> VideoMetrics:
    with open(track_path, "r", encoding="utf-8") as fh:
        track = parse_annotation_track(fh)
    archive = read_mask_archive(archive_dir)
    return evaluate_video(track, archive, config)


def _video_csv_lines(vm: VideoMetrics) -> list[str]:
    lines = ["video_id,feature,metric,value"]
    for feat, fm in sorted(vm.features.items()):
        for metric in METRIC_NAMES:
            value = getattr(fm, metric)
            if value is not None:
                lines.append(f"{vm.video_id},{feat},{metric},{value!r}")
    if vm.eye_opening_miou is not None:
        lines.append(f"{vm.video_id},eye_opening,miou,{vm.eye_opening_miou!r}")
    if vm.iris_sclera_overlap is not None:
        lines.append(f"{vm.video_id},iris_sclera,overlap,{vm.iris_sclera_overlap!r}")
    return lines


def cmd_evaluate(args: argparse.Namespace) -> int:
    pairs = args.pair or []
    if not pairs:
        _eprint("error: at least one --pair TRACK ARCHIVE is required")
        return 1
    for track_path, archive_dir in pairs:
        _require_file(track_path)
        _require_file(str(Path(archive_dir) / "manifest.json"))
    config = _eval_config(args)
    jobs = args.jobs or _default_jobs()
    if jobs > 1 and len(pairs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            videos = list(pool.map(_evaluate_pair, *zip(*[(t, a) for t, a in pairs]),
                                   [config] * len(pairs)))
    else:
        videos = [_evaluate_pair(t, a, config) for t, a in pairs]
    videos.sort(key=lambda v: v.video_id)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for vm in videos:
        (out / f"{vm.video_id}.csv").write_text("\n".join(_video_csv_lines(vm)) + "\n", "utf-8")
    report = {
        "toolkit_version": __version__,
        "config": {
            **config.to_dict(),
            "pairs": [[t, a] for t, a in pairs],
            "jobs": jobs,
            "out": str(out),
        },
        "videos": {vm.video_id: vm.to_dict() for vm in videos},
        "dataset": summarize(videos),
    }
    (out / "summary.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", "utf-8")
    _eprint(f"evaluated {len(videos)} video(s); reports in {out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    if not args.stdout and not args.out:
        _eprint("error: --out is required unless --stdout is given")
        return 1
    for p in args.summaries:
        _require_file(p)
    merged_videos: dict[str, dict] = {}
    configs = []
    for p in args.summaries:
        data = json.loads(Path(p).read_text("utf-8"))
        configs.append({k: v for k, v in data["config"].items() if k not in ("pairs", "out", "jobs")})
        merged_videos.update(data["videos"])
    if any(c != configs[0] for c in configs[1:]):
        _eprint("error: summaries were produced with different configurations")
        return 1

    videos = []
    from .metrics import FeatureMetrics  # local to keep module import light

    for vid in sorted(merged_videos):
        rec = merged_videos[vid]
        videos.append(
            VideoMetrics(
                video_id=vid,
                features={
                    feat: FeatureMetrics(**vals) for feat, vals in rec["features"].items()
                },
                eye_opening_miou=rec["eye_opening_miou"],
                iris_sclera_overlap=rec["iris_sclera_overlap"],
            )
        )
    report = {
        "toolkit_version": __version__,
        "config": configs[0],
        "n_videos": len(videos),
        "dataset": summarize(videos),
    }
    tsv_lines = ["video_id\tfeature\tmetric\tvalue"]
    for vm in videos:
        for feat, fm in sorted(vm.features.items()):
            for metric in METRIC_NAMES:
                value = getattr(fm, metric)
                if value is not None:
                    tsv_lines.append(f"{vm.video_id}\t{feat}\t{metric}\t{value!r}")
        if vm.eye_opening_miou is not None:
            tsv_lines.append(f"{vm.video_id}\teye_opening\tmiou\t{vm.eye_opening_miou!r}")
        if vm.iris_sclera_overlap is not None:
            tsv_lines.append(f"{vm.video_id}\tiris_sclera\toverlap\t{vm.iris_sclera_overlap!r}")
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.stdout:
        sys.stdout.write(text)
    else:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "dataset_summary.json").write_text(text, "utf-8")
        (out / "plot_data.tsv").write_text("\n".join(tsv_lines) + "\n", "utf-8")
        _eprint(f"wrote dataset summary for {len(videos)} video(s) to {out}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eyeseg-eval",
        description="Prompt generation, mask-signal extraction and quality metrics for eye-video segmentation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="convert TEyeD annotation files to normalized JSONL")
    p.add_argument("--pupil", required=True)
    p.add_argument("--iris", required=True)
    p.add_argument("--eyelid", required=True)
    p.add_argument("--video-id", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--fps", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("gen-prompts", help="build the scripted prompt set for one frame")
    p.add_argument("track")
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--margin", type=float, default=10.0)
    p.add_argument("--samples", type=int, default=720)
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_gen_prompts)

    p = sub.add_parser("mock-segment", help="rasterize ground truth into a mask archive")
    p.add_argument("track")
    p.add_argument("--out", required=True)
    p.add_argument("--perturb", default="none", help="none | dilate:K | jitter:SIGMA | dropout:P")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mock_segment)

    p = sub.add_parser("extract", help="convert a mask archive into feature signal CSV")
    p.add_argument("archive")
    p.add_argument("--out", required=True)
    _add_metric_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="run the full metric suite on track/archive pairs")
    p.add_argument("--pair", nargs=2, action="append", metavar=("TRACK", "ARCHIVE"))
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None)
    _add_metric_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate evaluate summaries into dataset reports")
    p.add_argument("summaries", nargs="+")
    p.add_argument("--out")
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except EyesegError as exc:
        _eprint(f"error: {type(exc).__name__}: {exc}")
        return 1
    except ValueError as exc:
        _eprint(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
