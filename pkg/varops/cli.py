"""varops command line: selftest, run <config>, report <dir>."""
import argparse
import sys
from typing import List, Optional

from absl import logging

from varops.errors import ConfigError
from varops.experiments import run_selftest
from varops.registration import make
from varops.utils.config import load_config
from varops.utils.report import aggregate, write_json

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="varops",
        description="Numerical checks of weighted q-variation inequalities.",
    )
    parser.add_argument(
        "--verbosity",
        default="info",
        choices=["debug", "info", "warning", "error"],
        help="absl logging verbosity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    selftest = sub.add_parser("selftest", help="run the oracle batteries")
    selftest.add_argument("--quick", action="store_true", help="smaller batteries")
    selftest.add_argument("--output", default=None, help="JSON report path")
    selftest.add_argument("--timing", action="store_true", help="include runtime")

    run = sub.add_parser("run", help="run one experiment config (YAML or JSON)")
    run.add_argument("config")
    run.add_argument("--output", default=None, help="JSON report path")
    run.add_argument("--timing", action="store_true", help="include runtime")

    report = sub.add_parser("report", help="merge the JSON reports of a directory")
    report.add_argument("directory")
    report.add_argument("--format", default="csv", choices=["csv", "json"])
    report.add_argument("--output", default=None, help="output path")
    return parser


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))
    else:
        with open(path, "w") as file:
            file.write(text)


def run_config(config_fname: str, output: Optional[str], timing: bool) -> int:
    config = dict(load_config(config_fname))
    experiment_id = config.pop("experiment", None)
    if experiment_id is None:
        raise ConfigError(f"Config {config_fname} does not name an `experiment`.")
    experiment, _ = make(experiment_id)
    params = experiment.params_from_config(config)
    report = experiment.run(params)
    path = output if output is not None else params.output
    text = write_json(report.to_dict(timing=timing), path)
    if path is None:
        _emit(text, None)
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.set_verbosity(args.verbosity)
    try:
        if args.command == "selftest":
            report = run_selftest(quick=args.quick)
            text = write_json(report.to_dict(timing=args.timing), args.output)
            if args.output is None:
                _emit(text, None)
            return EXIT_PASS if report.passed else EXIT_FAIL
        if args.command == "run":
            return run_config(args.config, args.output, args.timing)
        _emit(aggregate(args.directory, args.format), args.output)
        return EXIT_PASS
    except ConfigError as err:
        logging.error("Configuration error: %s", err)
        sys.stderr.write(f"varops: configuration error: {err}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
