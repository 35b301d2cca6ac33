"""Command-line entry point: simulate -> track -> eval -> features -> classify.

Every subcommand prints exactly one JSON object to stdout (logs go to
stderr) and is idempotent: identical inputs and seeds give byte-identical
file outputs. Timestamps therefore appear only in the stdout manifest,
never in files.

Exit codes: 0 ok, 2 missing input, 3 parse/schema/config error,
4 data-consistency error, 5 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import AppConfig, load_config
from .data_model import (
    read_detections,
    read_features,
    read_labels,
    read_meta,
    read_tracks,
    write_detections,
    write_features,
    write_meta,
    write_sequences,
    write_tracks,
)
from .errors import (
    ConfigError,
    DataMismatchError,
    InsufficientDataError,
    ParseError,
    SchemaError,
    ToolTrackError,
)
from .mot_eval import evaluate
from .motion_features import (
    compute_features,
    select_main_track,
    series_to_sequence_row,
    to_series,
)
from .scenario_sim import generate, read_scenario
from .skill_rf import HIGH, cross_validate
from .track_engine import run as run_tracker

log = logging.getLogger("tooltrack")


def _manifest(subcommand: str, inputs: dict, outputs: dict,
              config: str | None, seed) -> dict:
    return {
        "subcommand": subcommand,
        "inputs": inputs,
        "outputs": outputs,
        "config": config,
        "seed": seed,
        "version": __version__,
    }


def _emit(result: dict, manifest: dict) -> None:
    stamped = dict(manifest)
    stamped["timestamp"] = datetime.now(timezone.utc).isoformat()
    print(json.dumps({**result, "manifest": stamped}))


def _write_json(path, result: dict, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({**result, "manifest": manifest}, fh)
        fh.write("\n")


def _require(path: str) -> str:
    if not Path(path).is_file():
        raise FileNotFoundError(path)
    return path


# --- subcommands -------------------------------------------------------------


def _cmd_simulate(args) -> None:
    spec = read_scenario(_require(args.spec))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sim = generate(spec)
    det_path = out_dir / "detections.jsonl"
    gt_path = out_dir / "gt.csv"
    meta_path = out_dir / "meta.json"
    write_detections(det_path, sim.meta, sim.frames)
    write_tracks(sim.gt, gt_path)
    write_meta(meta_path, sim.meta)
    log.info("simulated %d frames, %d objects", spec.duration, len(spec.objects))
    _emit(
        {
            "detections": str(det_path),
            "gt": str(gt_path),
            "meta": str(meta_path),
            "frames": spec.duration,
            "objects": len(spec.objects),
        },
        _manifest("simulate", {"spec": args.spec},
                  {"detections": str(det_path), "gt": str(gt_path),
                   "meta": str(meta_path)}, None, spec.seed),
    )


def _cmd_track(args) -> None:
    cfg = load_config(_require(args.config))
    meta, frames = read_detections(_require(args.detections))
    records = run_tracker(frames, cfg.tracker, meta)
    write_tracks(records, args.out)
    ids = {r.track_id for r in records}
    log.info("tracked %d records over %d identities", len(records), len(ids))
    _emit(
        {"out": args.out, "records": len(records), "tracks": len(ids)},
        _manifest("track", {"detections": args.detections}, {"tracks": args.out},
                  args.config, None),
    )


def _cmd_eval(args) -> None:
    gt = read_tracks(_require(args.gt))
    pred = read_tracks(_require(args.tracks))
    summary = evaluate(gt, pred, iou_min=args.iou).to_dict()
    manifest = _manifest("eval", {"tracks": args.tracks, "gt": args.gt},
                         {"report": args.out}, None, None)
    if args.out:
        _write_json(args.out, {"summary": summary}, manifest)
    _emit({"summary": summary}, manifest)


def _cmd_features(args) -> None:
    cfg = load_config(_require(args.config)) if args.config else AppConfig()
    meta = read_meta(_require(args.meta))
    records = read_tracks(_require(args.tracks))
    if not records:
        raise InsufficientDataError("tracks file holds no records")
    video_id = args.video_id or Path(args.tracks).stem

    end = max(r.frame for r in records) + 1
    start = max(0, end - int(round(args.window_end_seconds * meta.fps)))
    track_id = select_main_track(records, (start, end))
    series = to_series(records, track_id, (start, end), meta,
                       gap_fill_max=cfg.features.gap_fill_max)
    feats = compute_features(series, min_motion_speed=cfg.features.min_motion_speed)

    write_features([(video_id, feats.as_tuple())], args.out)
    if args.sequences_out:
        write_sequences([series_to_sequence_row(video_id, series)], args.sequences_out)
    log.info("main track %d over frames [%d, %d)", track_id, start, end)
    named = dict(zip(
        ("path_length", "mean_velocity", "mean_acceleration", "mean_jerk",
         "mean_curvature", "tortuosity", "mean_turning_angle", "motion_ratio"),
        feats.as_tuple(),
    ))
    _emit(
        {
            "out": args.out,
            "sequences_out": args.sequences_out,
            "video_id": video_id,
            "track_id": track_id,
            "window": [start, end],
            "features": named,
        },
        _manifest("features", {"tracks": args.tracks, "meta": args.meta},
                  {"features": args.out, "sequences": args.sequences_out},
                  args.config, None),
    )


def _cmd_classify(args) -> None:
    cfg = load_config(_require(args.config))
    ids, X = read_features(_require(args.features))
    labels = {lab.video_id: lab for lab in read_labels(_require(args.labels))}

    missing_labels = sorted(set(ids) - set(labels))
    missing_features = sorted(set(labels) - set(ids))
    if missing_labels or missing_features:
        raise DataMismatchError(
            "video ids do not line up; "
            f"features without labels: {missing_labels}; "
            f"labels without features: {missing_features}"
        )

    finite = np.all(np.isfinite(X), axis=1)
    excluded = [vid for vid, ok in zip(ids, finite) if not ok]
    if excluded:
        log.warning("excluding %d video(s) with undefined features: %s",
                    len(excluded), ", ".join(excluded))
    kept = [i for i, ok in enumerate(finite) if ok]
    X = X[kept]
    y = np.array([1 if labels[ids[i]].binary_class == "high" else 0 for i in kept],
                 dtype=np.int64)

    report = cross_validate(X, y, cfg.forest, k=cfg.cv_folds,
                            n_permutations=cfg.n_permutations)
    result = {
        "report": report.to_dict(),
        "n_videos": len(kept),
        "n_high": int(np.count_nonzero(y == HIGH)),
        "excluded": excluded,
        "config": cfg.to_dict(),
    }
    manifest = _manifest("classify", {"features": args.features, "labels": args.labels},
                         {"report": args.out}, args.config, cfg.forest.rng_seed)
    if args.out:
        _write_json(args.out, result, manifest)
    _emit(result, manifest)


# --- argument parsing ---------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tooltrack",
        description="Tool tracking and motion-based skill assessment pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic detection stream")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("track", help="run the tracker over detections")
    p.add_argument("--detections", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("eval", help="CLEAR-MOT evaluation against ground truth")
    p.add_argument("--tracks", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("features", help="motion features for the main tool")
    p.add_argument("--tracks", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--window-end-seconds", type=float, default=180.0)
    p.add_argument("--video-id", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--sequences-out", default=None)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("classify", help="cross-validated skill classification")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_classify)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        args.func(args)
    except FileNotFoundError as e:
        print(f"error: missing input file: {e}", file=sys.stderr)
        return 2
    except (ParseError, SchemaError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (DataMismatchError, InsufficientDataError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except ToolTrackError as e:
        print(f"error: {e}", file=sys.stderr)
        return 5
    except Exception as e:  # pragma: no cover - unexpected
        print(f"internal error: {e}", file=sys.stderr)
        return 5
    return 0


if __name__ == "__main__":
    sys.exit(main())
