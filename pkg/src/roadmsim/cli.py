"""Command-line entry point.

Usage: roadmsim {comb,b2b-sweep,adddrop,spectrum} --config FILE --out DIR [--seed N]

Exit codes: 0 success, 2 configuration error, 3 interferometer alignment
failure, 4 add/drop validation check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import SCENARIOS, load_config
from .errors import AlignmentError, ConfigError
from .harness import run_adddrop, run_b2b_sweep, run_comb, run_spectrum

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ALIGNMENT = 3
EXIT_CHECKS = 4


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="roadmsim",
        description=(
            "Comb-based superchannel and subcarrier add/drop node simulator: "
            "generates the comb spectrum, sweeps BER vs OSNR back-to-back, "
            "and validates the add/drop operation."
        ),
    )
    parser.add_argument("scenario", choices=SCENARIOS, help="experiment to run")
    parser.add_argument(
        "--config",
        default=None,
        help="YAML run config (default: the packaged configuration)",
    )
    parser.add_argument("--out", required=True, help="output directory for CSV files")
    parser.add_argument(
        "--seed", type=int, default=None, help="override root_seed from the config"
    )
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if cfg.scenario != args.scenario:
            cfg = dataclasses.replace(cfg, scenario=args.scenario)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, root_seed=args.seed)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.scenario == "comb":
            run_comb(cfg, args.out)
        elif args.scenario == "b2b-sweep":
            run_b2b_sweep(cfg, args.out)
        elif args.scenario == "spectrum":
            run_spectrum(cfg, args.out)
        else:
            outcome = run_adddrop(cfg, args.out)
            if not outcome.checks_passed:
                return EXIT_CHECKS
    except AlignmentError as exc:
        print(f"alignment failure: {exc}", file=sys.stderr)
        return EXIT_ALIGNMENT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
