"""Command-line interface mirroring the HTTP API for offline use."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import audio_beats
from .errors import SyncupError
from .motion_model import parse_pose_stream
from .ratings import cross_validate, load_ratings_csv, train_method
from .regressors import model_from_text, model_to_text
from .render import export_heatmaps
from .scoring_service import (
    AnalysisConfig,
    RoleRecording,
    Session,
    analyze_session,
    report_to_dict,
    spotlight,
)

METHOD_ALIASES = {
    "addition": "addition",
    "svr": "svr",
    "nn-short": "nn_short",
    "nn-long": "nn_long",
}


def _load_role_recording(path: str, role: str, fps, beats_path, bpm, audio_path) -> RoleRecording:
    with open(path) as fh:
        recording = parse_pose_stream(fh.read(), fps=fps)
    recording = type(recording)(id=recording.id, fps=recording.fps,
                                frames=recording.frames, role=role,
                                audio_ref=audio_path)
    grid = None
    env = None
    if beats_path:
        with open(beats_path) as fh:
            grid = audio_beats.parse_beat_file(fh.read())
    elif bpm:
        grid = audio_beats.constant_grid(bpm, end_ms=float(recording.times_ms[-1]))
    if audio_path:
        samples, sr = audio_beats.load_wav(audio_path)
        env = audio_beats.onset_envelope(samples, sr)
    return RoleRecording(role=role, recording=recording, beats=grid, audio_env=env)


def cmd_analyze(args) -> int:
    method = METHOD_ALIASES[args.method]
    model = None
    if args.model:
        with open(args.model) as fh:
            model = model_from_text(fh.read())
    cfg = AnalysisConfig(
        lam=args.lam, method=method, leader=args.leader, n_bins=args.n_bins,
        w_pose=args.w_pose, w_time=args.w_time, tau_cap_ms=args.tau_cap_ms,
        max_shift_ms=args.max_shift_ms, seed=args.seed,
    )
    sess = Session(id=args.session_id, mode=args.mode, practice_index=args.practice_index)
    if args.mode == "group":
        sess.add_recording(_load_role_recording(
            args.poses, "group", args.fps, args.beats, args.bpm, args.audio))
    else:
        sess.add_recording(_load_role_recording(
            args.poses, "leader", args.fps, args.beats, args.bpm, args.audio))
        if not args.follower_poses:
            print("individual mode needs --follower-poses", file=sys.stderr)
            return 2
        for i, fp in enumerate(args.follower_poses):
            f_audio = args.follower_audio[i] if args.follower_audio and i < len(args.follower_audio) else None
            sess.add_recording(_load_role_recording(fp, "follower", args.fps, None, None, f_audio))

    report = analyze_session(sess, cfg, model=model)

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        json.dump(report_to_dict(report), fh)
    svgs = export_heatmaps(report, "svg")
    with open(os.path.join(args.out, "pose_heatmap.svg"), "w") as fh:
        fh.write(svgs["pose"])
    with open(os.path.join(args.out, "temporal_heatmap.svg"), "w") as fh:
        fh.write(svgs["temporal"])
    with open(os.path.join(args.out, "overlay.jsonl"), "w") as fh:
        fh.write(export_heatmaps(report, "object-stream"))
    with open(os.path.join(args.out, "alignment.csv"), "w") as fh:
        fh.write("s,follower_id,tau_ms,peak_corr,flags\n")
        for sc in report.segment_scores:
            for j in sorted(sc.per_follower_tau):
                fh.write(f"{sc.s},{j},{sc.per_follower_tau[j]},"
                         f"{sc.peak_corr.get(j, '')},{';'.join(sc.flags)}\n")

    print(f"analyzed {report.n_frames} frames, {len(report.segments)} segments, "
          f"{report.dancer_count} dancers")
    print("s  ops_mean  tau_total_ms  combined  flags")
    for sc in report.segment_scores:
        print(f"{sc.s:<2} {sc.ops_mean:>8.3f} {sc.tau_total_ms:>13.1f} "
              f"{sc.combined:>9.3f}  {','.join(sc.flags) or '-'}")
    print("s  follower  tau_ms  peak_corr")
    for sc in report.segment_scores:
        for j in sorted(sc.per_follower_tau):
            print(f"{sc.s:<2} {j:>8} {sc.per_follower_tau[j]:>7.1f} "
                  f"{sc.peak_corr.get(j, float('nan')):>9.3f}")
    worst = spotlight(report).entries[0]
    print(f"worst segment: {worst.s} (combined {worst.combined:.3f})")
    print(f"artifacts written to {args.out}")
    return 0


def cmd_train(args) -> int:
    with open(args.ratings) as fh:
        data = load_ratings_csv(fh.read())
    method = METHOD_ALIASES[args.method]
    hyper = {}
    if method == "svr":
        hyper = {"c": args.c, "epsilon": args.epsilon, "epochs": args.epochs}
    model = train_method(method, data.x, data.y, lam=args.lam, seed=args.seed, **hyper)
    with open(args.out, "w") as fh:
        fh.write(model_to_text(model))
    final = model.loss_curve[-1] if model.loss_curve else float("nan")
    print(f"trained {method} on {len(data)} samples (lambda={args.lam}); "
          f"final loss {final:.5f}; model -> {args.out}")
    return 0


def cmd_cv(args) -> int:
    with open(args.ratings) as fh:
        data = load_ratings_csv(fh.read())
    methods = [METHOD_ALIASES[m.strip()] for m in args.methods.split(",")]
    results = cross_validate(data, methods, lam=args.lam, seed=args.seed)
    print(f"{len(data.source_ids())}-fold cross-validation on {len(data)} samples (lambda={args.lam})")
    print("method     RMSE    Pearson r   p-value")
    for name, res in results.items():
        print(f"{name:<9} {res.rmse:>6.4f} {res.pearson:>10.3f} {res.p_value:>9.2g}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service_api import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="syncup",
                                     description="Dance synchronization scoring engine")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="analyze a session offline")
    pa.add_argument("--mode", choices=["group", "individual"], default="group")
    pa.add_argument("--poses", required=True, help="pose stream (group recording or leader)")
    pa.add_argument("--follower-poses", nargs="*", default=[], help="follower pose streams (individual mode)")
    pa.add_argument("--fps", type=float, default=None)
    pa.add_argument("--beats", default=None, help="beat file (one ms value per line)")
    pa.add_argument("--bpm", type=float, default=None, help="constant tempo anchored at t=0")
    pa.add_argument("--audio", default=None, help="wav file for beat estimation / alignment")
    pa.add_argument("--follower-audio", nargs="*", default=[], help="follower wavs (individual mode)")
    pa.add_argument("--lambda", dest="lam", type=float, default=0.885)
    pa.add_argument("--method", choices=sorted(METHOD_ALIASES), default="svr")
    pa.add_argument("--model", default=None, help="trained model file (required unless --method addition)")
    pa.add_argument("--leader", type=int, default=0, help="leader dancer index (group mode)")
    pa.add_argument("--n-bins", type=int, default=16)
    pa.add_argument("--max-shift-ms", type=float, default=None)
    pa.add_argument("--w-pose", type=float, default=0.5)
    pa.add_argument("--w-time", type=float, default=0.5)
    pa.add_argument("--tau-cap-ms", type=float, default=500.0)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--practice-index", type=int, default=0)
    pa.add_argument("--session-id", default="session")
    pa.add_argument("--out", required=True, help="output directory")
    pa.set_defaults(func=cmd_analyze)

    pt = sub.add_parser("train", help="train an OPS regressor from a ratings CSV")
    pt.add_argument("--ratings", required=True)
    pt.add_argument("--method", choices=["svr", "nn-short", "nn-long"], default="svr")
    pt.add_argument("--lambda", dest="lam", type=float, default=0.885)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--c", type=float, default=1.0)
    pt.add_argument("--epsilon", type=float, default=0.01)
    pt.add_argument("--epochs", type=int, default=2000)
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_train)

    pc = sub.add_parser("cv", help="leave-one-source-out cross-validation")
    pc.add_argument("--ratings", required=True)
    pc.add_argument("--methods", default="addition,svr,nn-short,nn-long")
    pc.add_argument("--lambda", dest="lam", type=float, default=0.885)
    pc.add_argument("--seed", type=int, default=0)
    pc.set_defaults(func=cmd_cv)

    ps = sub.add_parser("serve", help="run the HTTP API")
    ps.add_argument("--host", default="127.0.0.1")
    ps.add_argument("--port", type=int, default=8000)
    ps.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SyncupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
