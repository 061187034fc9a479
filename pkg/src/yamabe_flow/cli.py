# src/yamabe_flow/cli.py
import argparse

from yamabe_flow.config import COMMANDS, load_config
from yamabe_flow.core import execute, setup_logger
from yamabe_flow.errors import YamabeFlowError

# flag dest -> config key
FLAG_KEYS = {
    "dimension": "DIMENSION",
    "preset": "PRESET",
    "compare_preset": "COMPARE_PRESET",
    "r_min": "R_MIN",
    "ell": "ELL",
    "nodes": "NODES",
    "dt": "DT",
    "t_final": "T_FINAL",
    "theta": "THETA",
    "gradient": "GRADIENT",
    "ladder": "LADDER",
    "domains": "DOMAINS",
    "t_samples": "T_SAMPLES",
    "b_flat": "B_FLAT",
    "tolerance": "TOLERANCE",
    "output": "OUTPUT",
}

COMMAND_HELP = {
    "run": "Solve one flow and export it.",
    "compare": "Solve two flows on one mesh and check their ordering.",
    "exhaust": "Solve on a ladder of balls and measure interior convergence.",
    "incompleteness": "Measure radial lengths across domain sizes.",
    "barriers": "Solve one flow and check every barrier and curvature bound.",
}


def _run_flags() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="Flat KEY=value file with run settings.")
    parser.add_argument("--profile", help="Default profile: desk or fine.")
    parser.add_argument("--dimension", type=int)
    parser.add_argument(
        "--preset",
        help="constant:c, flat:b, bump:base,amplitude,center,width, sphere, powerlaw:b",
    )
    parser.add_argument("--compare-preset")
    parser.add_argument("--r-min", type=float)
    parser.add_argument("--ell", type=float)
    parser.add_argument("--nodes", type=int)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--t-final", type=float)
    parser.add_argument("--theta", type=float)
    parser.add_argument("--gradient", choices=["implicit", "explicit"])
    parser.add_argument("--ladder", help="Comma-separated ball radii.")
    parser.add_argument("--domains", help="Comma-separated domain sizes.")
    parser.add_argument("--t-samples", help="Comma-separated sample times.")
    parser.add_argument("--b-flat", type=float)
    parser.add_argument("--tolerance", type=float)
    parser.add_argument("--output", help="Directory for every output file.")
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="yamabe-flow",
        description="Rotationally symmetric Yamabe flow on hyperbolic space",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    flags = _run_flags()
    for name in COMMANDS:
        commands.add_parser(name, parents=[flags], help=COMMAND_HELP[name])
    return parser


def parse_config(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {key: getattr(args, dest) for dest, key in FLAG_KEYS.items()}
    return load_config(
        args.command,
        profile=args.profile,
        config_file=args.config,
        overrides=overrides,
    )


def main(argv=None) -> int:
    try:
        config = parse_config(argv)
        report = execute(config)
    except YamabeFlowError as e:
        setup_logger().error(f"❌ {e}")
        return 2
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
