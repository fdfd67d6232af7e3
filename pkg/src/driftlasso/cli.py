"""``driftlasso`` command line.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 a checked frequency fell below the configured threshold.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace

from . import experiments
from .config import ConfigError, load_config
from .estimators import CVFailed
from .likelihood import LikelihoodError
from .sim import SimulationDiverged

logger = logging.getLogger("driftlasso")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_THRESHOLD = 4

COMMANDS = {
    "simulate": experiments.cmd_simulate,
    "fit": experiments.cmd_fit,
    "cv": experiments.cmd_cv,
    "figure1": experiments.cmd_figure1,
    "scaling-study": experiments.cmd_scaling_study,
    "verify": experiments.cmd_verify,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="driftlasso",
                                     description="Sparse drift estimation for ergodic diffusions")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML or JSON run config")
        p.add_argument("--seed", type=int, help="override sim.seed")
        p.add_argument("--out-dir", help="override experiment.output_dir")
        p.add_argument("--trials", type=int, help="override experiment.trials")
        p.add_argument("--threads", type=int, help="worker processes (experiment.workers)")
        if name in ("fit", "cv"):
            p.add_argument("--path", help="observed path CSV instead of simulating one")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config).override(seed=args.seed, out_dir=args.out_dir,
                                                trials=args.trials, threads=args.threads)
        if getattr(args, "path", None):
            cfg = replace(cfg, experiment=replace(cfg.experiment, path=args.path))
        result = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationDiverged, LikelihoodError, CVFailed, FloatingPointError,
            experiments.AllTrialsFailed) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except experiments.ThresholdNotMet as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_THRESHOLD
    if args.verbose and isinstance(result, dict):
        print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
