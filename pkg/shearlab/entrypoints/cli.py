'''
Command-line runner: `python -m shearlab.entrypoints.cli run <config>`.
It turns a scenario file into a command, hands it to the message bus and maps
domain errors onto exit statuses.
'''
import argparse
import configparser
import logging
import sys
from pathlib import Path

from shearlab import config
from shearlab.adapters import config_file
from shearlab.domain.exceptions import ConvergenceError, ValidationError
from shearlab.service_layer import messagebus, unit_of_work

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3


def parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="shearlab",
        description="Run a Keplerian shear scenario and write its CSV artifacts.",
    )
    commands = parser.add_subparsers(dest="action", required=True)
    run = commands.add_parser("run", help="run one scenario file")
    run.add_argument("config", type=Path, help="path to the scenario file")
    run.add_argument("--out", type=Path, default=None, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="overrides the scenario seed")
    run.add_argument("--threads", type=int, default=None, help="worker threads, 0 = auto")
    run.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")
    return parser.parse_args(argv)


def run(args) -> int:
    try:
        command = config_file.load(args.config, seed=args.seed, threads=args.threads)
        uow = unit_of_work.FileSystemUnitOfWork(args.out or config.get_output_dir())
        messagebus.handle(command, uow)
    except (ValidationError, configparser.Error, OSError) as error:
        print(f"shearlab: invalid scenario: {error}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as error:
        print(f"shearlab: numerics did not converge: {error}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    args = parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or config.get_log_level()).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
