"""Command-line entry point: `python -m vidnetsim <command>`."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from .errors import VidNetSimError
from .logging_setup import configure_logging
from .services.config import load_config, resolve_config_path
from .services.experiments import ExperimentKind, ExperimentSpec, run_experiment
from .services.report import emit_report
from .settings import get_settings
from .video.codec import GopConfig, bitrate_of, encode_sequence
from .video.container import write_bitstream
from .video.quality import psnr_per_frame
from .video.yuv import read_yuv, synthetic_sequence, write_yuv

logger = logging.getLogger(__name__)


def parse_resolution(text: str) -> Tuple[int, int]:
    try:
        width, height = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got '{text}'") from None
    if width <= 0 or height <= 0 or width % 2 or height % 2:
        raise argparse.ArgumentTypeError(f"resolution must be positive and even, got {text}")
    return width, height


def cmd_run(args: argparse.Namespace) -> int:
    settings = get_settings()
    path = resolve_config_path(args.config, settings.profile_dir)
    cfg = load_config(path)
    if args.seed is not None:
        cfg = cfg.with_updates(seed=args.seed)
    spec = ExperimentSpec.from_config(ExperimentKind.from_cli(args.experiment), cfg, args.reps)
    jobs = args.jobs if args.jobs is not None else settings.jobs
    rows = run_experiment(cfg, spec, jobs=jobs)
    out = Path(args.out) if args.out else settings.out_dir
    emit_report(rows, out, qos_delay_ms=cfg.experiment.qos_delay_ms, qos_jitter_ms=cfg.experiment.qos_jitter_ms)
    print(f"{len(rows)} runs written to {out}")
    print((out / "summary.txt").read_text(encoding="utf-8"), end="")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    path = resolve_config_path(args.config, get_settings().profile_dir)
    cfg = load_config(path)
    print(f"{path}: OK")
    print(f"   seed {cfg.seed}, {cfg.nodes.wimax_ss} WiMAX / {cfg.nodes.wifi_client} Wi-Fi / "
          f"{cfg.nodes.relief_center_lan} LAN nodes")
    print(f"   video {cfg.video.source} {cfg.video.width}x{cfg.video.height}, {cfg.video.frames} frames, "
          f"GOP {cfg.video.gop_size}, QP {cfg.video.qp}")
    print(f"   error model {cfg.error.model}, pacing {cfg.transport.pacing.value}")
    for name, sections in cfg.experiment.overrides.items():
        print(f"   {name} overrides {', '.join(sorted(sections))}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    width, height = args.resolution
    frames = synthetic_sequence(width, height, args.frames, motion=args.motion, slope=args.slope)
    write_yuv(args.out, frames)
    print(f"wrote {len(frames)} frames of {width}x{height} to {args.out}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    width, height = args.resolution
    reference = read_yuv(args.ref, width, height, args.frames)
    reconstructed = read_yuv(args.rec, width, height, args.frames)
    count = min(len(reference), len(reconstructed))
    scores = psnr_per_frame(reference[:count], reconstructed[:count])
    for index, score in enumerate(scores):
        print(f"frame {index:4d}  Y-PSNR {score:7.3f} dB")
    print(f"mean   Y-PSNR {sum(scores) / len(scores):7.3f} dB over {count} frames")
    return 0


def cmd_encode(args: argparse.Namespace) -> int:
    width, height = args.resolution
    if args.input:
        frames = read_yuv(args.input, width, height, args.frames)
    else:
        frames = synthetic_sequence(width, height, args.frames or 10)
    bs = encode_sequence(frames, GopConfig(args.gop, args.gop - 1, args.frame_rate, args.qp))
    size = write_bitstream(args.out, bs)
    print(f"wrote {len(bs)} frames ({size} bytes, {bitrate_of(bs) / 1e3:.1f} kbps) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidnetsim",
                                     description="Video streaming over a simulated disaster-area network")
    parser.add_argument("--log-level", default=None, help="override VNSIM_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep experiment and write the report")
    run.add_argument("config", help="config file or profile name")
    run.add_argument("--experiment", required=True,
                     choices=["error", "nodes", "speed"] + [kind.value for kind in ExperimentKind])
    run.add_argument("--out", help="output directory (default VNSIM_OUT_DIR)")
    run.add_argument("--seed", type=int)
    run.add_argument("--reps", type=int)
    run.add_argument("--jobs", type=int)
    run.set_defaults(handler=cmd_run)

    validate = sub.add_parser("validate", help="check a config file")
    validate.add_argument("config")
    validate.set_defaults(handler=cmd_validate)

    synth = sub.add_parser("synth", help="write a synthetic raw 4:2:0 sequence")
    synth.add_argument("--resolution", type=parse_resolution, required=True)
    synth.add_argument("--frames", type=int, required=True)
    synth.add_argument("--out", required=True)
    synth.add_argument("--motion", type=int, default=8)
    synth.add_argument("--slope", type=float, default=0.45)
    synth.set_defaults(handler=cmd_synth)

    score = sub.add_parser("score", help="Y-PSNR between two raw sequences")
    score.add_argument("--ref", required=True)
    score.add_argument("--rec", required=True)
    score.add_argument("--resolution", type=parse_resolution, required=True)
    score.add_argument("--frames", type=int)
    score.set_defaults(handler=cmd_score)

    encode = sub.add_parser("encode", help="encode a raw or synthetic sequence to a VNS1 container")
    encode.add_argument("--input", help="raw .yuv file (synthetic sequence when omitted)")
    encode.add_argument("--resolution", type=parse_resolution, required=True)
    encode.add_argument("--frames", type=int)
    encode.add_argument("--gop", type=int, default=4)
    encode.add_argument("--qp", type=int, default=32)
    encode.add_argument("--frame-rate", type=float, default=24.0)
    encode.add_argument("--out", required=True)
    encode.set_defaults(handler=cmd_encode)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or get_settings().log_level)
    try:
        return args.handler(args)
    except VidNetSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # bad parameter values from the domain types
        print(f"error: {exc}", file=sys.stderr)
        return 2
