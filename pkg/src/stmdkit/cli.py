"""Command-line entry point: detect, synth, roc, tune, sensitivity.

Configuration precedence: command-line flags override values from --config
(a JSON document with "model", "synth", and "eval" sections), which override
the built-in defaults. Every command echoes its effective configuration into
the output directory so a run can be reproduced bit-for-bit.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError, InvalidStateError
from .evaluate import (
    SENSITIVITY_GRIDS,
    auto_lambda_grid,
    collect_run,
    roc_sweep,
    sensitivity_sweep,
    tuning_sweep,
)
from .frameio import list_frame_files, read_frame, write_csv, write_pgm
from .pipeline import DetectorState, ModelParams, process_frame
from .synth import SynthConfig, group_configs, write_sequence

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INPUT = 2
EXIT_STREAM = 3


def _load_config_file(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParameterError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidParameterError("config file must hold a JSON object")
    return doc


def _build_model(doc: dict, args) -> ModelParams:
    params = ModelParams(**doc.get("model", {}))
    if getattr(args, "fps", None) is not None:
        params = dataclasses.replace(params, fps=args.fps)
    if getattr(args, "lam", None) is not None:
        params = dataclasses.replace(params, lam=args.lam)
    if getattr(args, "no_feedback", False):
        params = params.without_feedback()
    params.validate()
    return params


def _build_synth(doc: dict, args) -> SynthConfig:
    cfg = SynthConfig.from_dict(doc.get("synth", {}))
    if getattr(args, "fps", None) is not None:
        cfg = dataclasses.replace(cfg, fps=args.fps)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "frames", None) is not None:
        cfg = dataclasses.replace(cfg, duration_frames=args.frames)
    cfg.validate()
    return cfg


def _echo_config(out_dir: Path, params: ModelParams, synth_cfg: SynthConfig | None,
                 eval_section: dict | None = None) -> None:
    doc = {"model": dataclasses.asdict(params)}
    if synth_cfg is not None:
        doc["synth"] = synth_cfg.to_dict()
    if eval_section:
        doc["eval"] = eval_section
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "effective_config.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _scale_map_to_unit(arr: np.ndarray) -> np.ndarray:
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def cmd_detect(args) -> int:
    doc = _load_config_file(args.config) if args.config else {}
    params = _build_model(doc, args)
    in_dir = Path(args.input)
    try:
        files = list_frame_files(in_dir)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not files:
        print(f"error: no frames in {in_dir}", file=sys.stderr)
        return EXIT_INPUT

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(out_dir, params, None)
    dump_names = [m.strip() for m in args.dump_maps.split(",") if m.strip()] \
        if args.dump_maps else []

    rows = []
    state = None
    for path in files:
        try:
            frame = read_frame(path)
        except Exception:
            print(f"error: unreadable frame {path}", file=sys.stderr)
            return EXIT_INPUT
        if state is None:
            state = DetectorState(params, frame.shape)
        try:
            result = process_frame(state, frame, params)
        except InvalidStateError:
            print(f"error: frame size changed mid-stream at {path}", file=sys.stderr)
            return EXIT_STREAM
        except InvalidParameterError as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        rows.extend((d.frame_index, d.x, d.y, repr(d.score)) for d in result.detections)
        for name in dump_names:
            arr = getattr(result, name, None)
            if arr is None:
                print(f"error: unknown map {name!r} for --dump-maps", file=sys.stderr)
                return EXIT_CONFIG
            map_dir = out_dir / f"maps_{name}"
            map_dir.mkdir(exist_ok=True)
            write_pgm(map_dir / f"frame_{result.frame_index:06d}.pgm",
                      _scale_map_to_unit(arr))
    write_csv(out_dir / "detections.csv", ["frame", "x", "y", "score"], rows)
    return EXIT_OK


def cmd_synth(args) -> int:
    doc = _load_config_file(args.config) if args.config else {}
    cfg = _build_synth(doc, args)
    out_dir = Path(args.out)
    if args.group is not None:
        for i, sub in enumerate(group_configs(args.group, cfg)):
            write_sequence(out_dir / f"group{args.group}" / f"config_{i:02d}", sub)
    else:
        write_sequence(out_dir, cfg)
    _echo_config(out_dir, ModelParams(), cfg)
    return EXIT_OK


def cmd_roc(args) -> int:
    doc = _load_config_file(args.config) if args.config else {}
    params = _build_model(doc, args)
    cfg = _build_synth(doc, args)
    eval_doc = doc.get("eval", {})
    lambdas = eval_doc.get("lambdas")
    if args.lambdas:
        lambdas = [float(x) for x in args.lambdas.split(",")]
    match_radius = float(eval_doc.get("match_radius", 5.0))

    maxima, gt_shifted, warmup = collect_run(cfg, params)
    if lambdas is None:
        lambdas = auto_lambda_grid(maxima)
    points = roc_sweep(maxima, gt_shifted, lambdas, nms_radius=params.nms_radius,
                       match_radius=match_radius, start_index=warmup)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "roc.csv", ["lambda", "d_r", "f_a"],
              [(repr(p.lam), repr(p.d_r), repr(p.f_a)) for p in points])
    _echo_config(out_dir, params, cfg, {"lambdas": [p.lam for p in points],
                                        "match_radius": match_radius})
    return EXIT_OK


def _axis_values(args, defaults):
    if args.values:
        return [float(v) for v in args.values.split(",")]
    return list(defaults)


def cmd_tune(args) -> int:
    doc = _load_config_file(args.config) if args.config else {}
    params = _build_model(doc, args)
    cfg = _build_synth(doc, args)
    defaults = {
        "velocity": [float(v) for v in range(50, 801, 50)],
        "width": [2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
        "height": [2.0, 5.0, 8.0, 10.0, 15.0, 20.0],
        "weber": [0.2, 0.4, 0.6, 0.8, 1.0],
    }
    values = _axis_values(args, defaults[args.axis])
    feedback = tuning_sweep(args.axis, values, cfg, params,
                            n_jobs=args.jobs, label="feedback")
    baseline = tuning_sweep(args.axis, values, cfg, params.without_feedback(),
                            n_jobs=args.jobs, label="no_feedback")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / f"tuning_{args.axis}.csv",
              ["value", "response_feedback", "response_nofeedback"],
              [(repr(v), repr(float(f)), repr(float(b)))
               for v, f, b in zip(values, feedback.responses, baseline.responses)])
    _echo_config(out_dir, params, cfg, {"axis": args.axis, "values": values})
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    doc = _load_config_file(args.config) if args.config else {}
    params = _build_model(doc, args)
    cfg = _build_synth(doc, args)
    values = _axis_values(args, SENSITIVITY_GRIDS[args.param])
    velocities = [float(v) for v in args.velocities.split(",")] if args.velocities \
        else [float(v) for v in range(50, 601, 50)]
    curves = sensitivity_sweep(args.param, values, cfg, params, velocities,
                               n_jobs=args.jobs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for value, curve in zip(values, curves):
        rows.extend((repr(float(value)), repr(v), repr(float(r)))
                    for v, r in zip(curve.axis_values, curve.responses))
    write_csv(out_dir / f"sensitivity_{args.param}.csv",
              ["param_value", "velocity", "response"], rows)
    _echo_config(out_dir, params, cfg,
                 {"param": args.param, "values": values, "velocities": velocities})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stmdkit",
        description="Small-target motion detection: detector, benchmark synth, evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p):
        p.add_argument("--config", help="JSON config file (model/synth/eval sections)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, help="synthesis seed override")
        p.add_argument("--fps", type=float, help="frame rate override (Hz)")
        p.add_argument("--no-feedback", action="store_true",
                       help="force the feedback gain to zero")
        p.add_argument("--lambda", dest="lam", type=float,
                       help="detection threshold override")
        p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("detect", help="run the detector over a directory of frames")
    add_shared(p)
    p.add_argument("--input", required=True, help="directory of PGM/PNG frames")
    p.add_argument("--dump-maps", help="comma list of maps to dump as PGM (e.g. Q,D,F)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("synth", help="render synthetic benchmark sequences")
    add_shared(p)
    p.add_argument("--group", type=int, choices=range(1, 7),
                   help="render a benchmark sweep group instead of one sequence")
    p.add_argument("--frames", type=int, help="sequence length override")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("roc", help="ROC curve on a synthetic sequence")
    add_shared(p)
    p.add_argument("--frames", type=int, help="sequence length override")
    p.add_argument("--lambdas", help="comma list of thresholds (default: auto grid)")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("tune", help="stimulus tuning curves (both models)")
    add_shared(p)
    p.add_argument("--axis", required=True,
                   choices=["velocity", "width", "height", "weber"])
    p.add_argument("--values", help="comma list of axis values")
    p.add_argument("--frames", type=int, help="sequence length override")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("sensitivity", help="feedback parameter sensitivity curves")
    add_shared(p)
    p.add_argument("--param", required=True, choices=sorted(SENSITIVITY_GRIDS))
    p.add_argument("--values", help="comma list of parameter values")
    p.add_argument("--velocities", help="comma list of sweep velocities")
    p.add_argument("--frames", type=int, help="sequence length override")
    p.set_defaults(func=cmd_sensitivity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STREAM


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
