"""Command-line driver: ``nsgframes {compare,corpus,spectrogram,validate}``.

Exit status: 0 on success, 2 on invalid input or a failed validation,
3 on file-system or WAV-format errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import NsgfError, NsgfIOError
from .pipeline import (
    ExperimentConfig,
    cmd_compare,
    cmd_corpus,
    cmd_spectrogram,
    cmd_validate,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--input", help="WAV file or directory (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--grid", help='"standard", "a:b:step,..." or "n1,n2,..."')
    spec = common.add_mutually_exclusive_group()
    spec.add_argument(
        "--half-spectrum",
        dest="half_spectrum",
        action="store_true",
        default=None,
        help="count and select bins m <= M/2 only (default)",
    )
    spec.add_argument(
        "--full-spectrum",
        dest="half_spectrum",
        action="store_false",
        help="select over all bins independently",
    )
    common.add_argument("--seed", type=int, help="seed for a synthetic input")
    common.add_argument("-q", "--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="nsgframes", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("compare", parents=[common], help="error curves and fits per transform")
    c = sub.add_parser("corpus", parents=[common], help="averaged table over a WAV directory")
    c.add_argument("--jobs", type=int, help="worker processes")
    s = sub.add_parser("spectrogram", parents=[common], help="write one spectrogram PGM")
    s.add_argument("--transform", help="transform name (default: first in config)")
    s.add_argument("-N", "--keep", type=int, help="keep only the N largest coefficients")
    sub.add_parser("validate", parents=[common], help="frame, covering and painless reports")
    return p


def build_config(args) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.input is not None:
        over["input"] = args.input
    if args.out is not None:
        over["outputs"] = args.out
    if args.grid is not None:
        over["n_grid"] = args.grid
    if args.half_spectrum is not None:
        over["half_spectrum"] = args.half_spectrum
    if getattr(args, "jobs", None) is not None:
        over["jobs"] = args.jobs
    if over:
        d = config.to_dict()
        d.update(over)
        config = ExperimentConfig.from_dict(d)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s: %(message)s"
    )
    try:
        config = build_config(args)
        if args.command == "compare":
            result = cmd_compare(config)
        elif args.command == "corpus":
            result = cmd_corpus(config)
        elif args.command == "spectrogram":
            result = cmd_spectrogram(config, args.transform, args.keep)
        else:
            result = cmd_validate(config)
    except (NsgfIOError, OSError) as exc:
        print(f"nsgframes: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NsgfError, ValueError) as exc:
        print(f"nsgframes: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not args.quiet:
        print(json.dumps(result, sort_keys=True, indent=1, default=str))
    if args.command == "validate" and not result["passed"]:
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
