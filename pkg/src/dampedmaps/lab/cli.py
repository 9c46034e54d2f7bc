"""Command line interface ``dampedlab``.

Exit status is 0 on success, 2 when validation rejects the configuration and
3 when a numerical stage cannot certify its result.
"""

import argparse
import json
import sys
from typing import Optional, Sequence

from qibo.config import log

from dampedmaps.exceptions import DampedMapsError
from dampedmaps.lab.experiment import ExperimentConfig
from dampedmaps.lab.pipelines import run_classical, run_full, run_quantum

COMMANDS = {
    "variance": "exact and Monte-Carlo asymptotic variance, concentration constant",
    "mdp": "moderate deviation tables and rate fits",
    "pressure": "pressure curve from the weighted transfer operator and its rate function",
    "spectrum": "eigenvalue dumps of the damped propagator for every N",
    "concentration": "decay-rate concentration reports in both window modes",
    "full": "classical and quantum pipelines with a single manifest",
    "validate": "check every precondition and exit",
}

CLASSICAL_COMMANDS = {
    "variance": ("variance", "constant"),
    "mdp": ("mdp",),
    "pressure": ("pressure", "rate"),
}
QUANTUM_COMMANDS = {
    "spectrum": ("spectrum",),
    "concentration": ("concentration",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dampedlab",
        description="Moderate deviations of Anosov toral maps and decay rates of damped quantum maps.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", default=None, help="experiment JSON document")
        sub.add_argument("--seed", type=int, default=None, help="master seed (u64)")
        sub.add_argument("--jobs", type=int, default=None, help="worker threads")
        sub.add_argument("--out", default=None, help="output directory")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {"seed": args.seed, "jobs": args.jobs, "output_dir": args.out}
    if args.config is not None:
        return ExperimentConfig.from_file(args.config, **overrides)
    return ExperimentConfig.from_overrides(**overrides)


def execute(command: str, config: ExperimentConfig):
    if command == "validate":
        config.validate()
        return None
    if command == "full":
        return run_full(config)
    if command in CLASSICAL_COMMANDS:
        return run_classical(config, CLASSICAL_COMMANDS[command])
    return run_quantum(config, QUANTUM_COMMANDS[command])


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        manifest = execute(args.command, config)
    except DampedMapsError as exc:
        log.error(f"{exc.code}: {exc}")
        return exc.exit_status
    if manifest is None:
        print(json.dumps({"valid": True, "config_hash": config.digest()}, sort_keys=True))
    else:
        print(json.dumps(manifest.to_json()["summary"], sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
