"""
Command-line driver: one subcommand per experiment stage plus figure
reproduction and file inspection.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

from sma import io, pipeline
from sma.config import load_config
from sma.errors import SmaError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _common_flags(parser, suppress):
    default = (lambda value: argparse.SUPPRESS) if suppress else (lambda value: value)
    parser.add_argument("--config", default=default(None), help="experiment TOML file (defaults: baseline disk)")
    parser.add_argument("--seed", type=int, default=default(None), help="override output.seed")
    parser.add_argument("--out", default=default(None), help="override the output directory")
    parser.add_argument("--threads", type=int, default=default(1), help="worker threads for replicate batches")
    parser.add_argument(
        "--force-direct-path",
        dest="force_direct",
        action="store_true",
        default=default(False),
        help="reconstruct before integrating instead of using influence weights",
    )
    parser.add_argument("--verbose", "-v", action="store_true", default=default(False), help="debug logging")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sma",
        description="Statistical edge analysis of sparse-view CT data",
    )
    _common_flags(parser, suppress=False)
    commands = parser.add_subparsers(dest="command", required=True)
    for name, stage in pipeline.COMMANDS.items():
        sub = commands.add_parser(name, help=(stage.__doc__ or "").strip().splitlines()[0])
        _common_flags(sub, suppress=True)
    sub = commands.add_parser("repro", help="data behind one figure")
    sub.add_argument("figure", choices=sorted(pipeline.FIGURES))
    _common_flags(sub, suppress=True)
    sub = commands.add_parser("inspect", help="header and summary of an SMA1 or Parquet file")
    sub.add_argument("file")
    _common_flags(sub, suppress=True)
    return parser


def print_summary(path):
    """Print the contents summary of a sinogram (.sma1) or sample (.parquet) file"""
    path = Path(path)
    print(f"🔍 Inspecting {path}")
    print("=" * 50)
    if path.suffix == ".parquet":
        frame, provenance = io.read_samples(path)
        for key, value in sorted(provenance.items()):
            print(f"📋 {key}: {value}")
        for arm, group in frame.groupby("arm", sort=False):
            print(f"📊 {arm}: {len(group)} samples, mean f1 = {group['f1'].mean():.6g}")
        return provenance
    summary = io.summarize_sinogram(path)
    print(f"📋 Views x detectors: {summary['n_alpha']} x {summary['n_p']}")
    print(f"📋 d_alpha = {summary['d_alpha']:.6g}, d_p = {summary['d_p']:.6g}, kappa = {summary['kappa']:.6g}")
    print(f"📋 p_bar = {summary['p_bar']:.6g}, support P = {summary['support']:.6g}")
    print(f"📊 min {summary['min']:.6g}, max {summary['max']:.6g}, mean {summary['mean']:.6g}")
    print(f"📊 L2 norm {summary['l2_norm']:.6g}, nonzero samples {summary['nonzero']}")
    return summary


def run(argv=None):
    """Parse arguments, run one subcommand and return its exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format=LOG_FORMAT, force=True)
    started = time.perf_counter()
    try:
        if args.command == "inspect":
            print_summary(args.file)
            return 0
        config = load_config(args.config, seed=args.seed, out=args.out)
        name = f"repro/{args.figure}" if args.command == "repro" else args.command
        session = pipeline.Session(
            config=config,
            out_dir=Path(config.output.dir) / name,
            threads=max(1, args.threads),
            force_direct=args.force_direct,
        )
        logger.info("running %s with config hash %s", name, config.config_hash())
        if args.command == "repro":
            pipeline.repro(session, args.figure)
        else:
            pipeline.COMMANDS[args.command](session)
    except SmaError as exc:
        print(f"❌ {type(exc).__name__}: {exc}")
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"❌ File not found: {exc.filename}")
        return 3
    print(f"⏱️  Elapsed: {time.perf_counter() - started:.1f} seconds")
    return 0


def main():
    sys.exit(run())
