"""Command-line entry point: ``lstmeq <verb> --config FILE [--seed N] [--out DIR]``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiment
from .errors import ConfigError, EqualizerError, ParseError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default; usage errors map to 1 here.
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, help="experiment YAML file (or a manifest)")
    common.add_argument("--seed", type=int, help="derive every named seed from this integer")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="lstmeq", description="LSTM equalizer link simulator and comparison tool.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common],
                   help="simulate the link; write waveforms and the raw eye")
    sub.add_parser("fit-baseline", parents=[common],
                   help="fit or load FFE-DFE taps and score them")
    sub.add_parser("train", parents=[common], help="train the LSTM equalizer")
    for name, text in (("evaluate", "score a trained model"),
                       ("compare", "none vs FFE-DFE vs LSTM on one realisation")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--model", help="model ROM (default: <out>/model.rom)")
    sp = sub.add_parser("render-eye", parents=[common], help="eye image of a waveform CSV")
    sp.add_argument("--input", required=True, help="waveform CSV")
    sp.add_argument("--bits", help="transmitted bits CSV used to label the eye")
    return p


def run(args) -> dict:
    cfg = experiment.load_config(args.config, seed=args.seed, out=args.out)
    if args.command == "simulate":
        return experiment.cmd_simulate(cfg)
    if args.command == "fit-baseline":
        return experiment.cmd_fit_baseline(cfg)
    if args.command == "train":
        return experiment.cmd_train(cfg)
    if args.command == "evaluate":
        return experiment.cmd_evaluate(cfg, args.model)
    if args.command == "compare":
        return experiment.cmd_compare(cfg, args.model)
    return experiment.cmd_render_eye(cfg, args.input, args.bits)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = run(args)
    except (ConfigError, ParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EqualizerError, ValueError, RuntimeError, OSError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
