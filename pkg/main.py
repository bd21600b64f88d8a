#!/usr/bin/env python3
"""
Certificate search and verification for matrix polynomial Positivstellensaetze
Command line entry point
"""

import argparse
import logging
import sys
import time
from typing import List, Optional

from psatz.config import DEFAULT_THETA_MAX, EXIT_CODES, LOG_FILE, LOG_LEVEL, MAX_WORKERS
from psatz.errors import ProblemFormatError, PsatzError
from psatz.handlers import (
    archimedean_handler, certify_handler, fejer_riesz_handler, nnsd_handler,
    refute_handler, reznick_handler, verify_handler
)
from psatz.utils import format_duration

logger = logging.getLogger(__name__)

COMMANDS = {
    'certify': certify_handler,
    'reznick': reznick_handler,
    'nnsd': nnsd_handler,
    'fejer-riesz': fejer_riesz_handler,
    'verify': verify_handler,
    'refute': refute_handler,
    'archimedean': archimedean_handler,
}


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this CLI reserves 2 for infeasibility"""

    def error(self, message):
        raise UsageError(message)


def setup_logging(level: str = LOG_LEVEL):
    """Configure logging"""
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=getattr(logging, level.upper(), logging.INFO),
        handlers=[
            logging.FileHandler(LOG_FILE),
            logging.StreamHandler()
        ]
    )


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='psatz', description=__doc__.strip().splitlines()[0])
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND', parser_class=ArgumentParser)

    for name, handler in COMMANDS.items():
        sub = subparsers.add_parser(name, help=handler.__doc__)
        sub.add_argument('--problem', required=True, help='problem file (JSON)')
        sub.add_argument('--out', help='output file for the certificate or witness')
        sub.add_argument('--t-min', type=int, help='lowest truncation level')
        sub.add_argument('--t-max', type=int, help='highest truncation level')
        sub.add_argument('--workers', type=int, default=MAX_WORKERS, help='levels solved concurrently')
        sub.add_argument('--log-level', default=LOG_LEVEL, help='DEBUG, INFO, WARNING or ERROR')
        sub.add_argument('--seed', type=int, default=0, help='seed for sampling checks')
        sub.add_argument('--dump-sdp', help='write each SDP in SDPA sparse format')
        if name in ('certify', 'fejer-riesz'):
            sub.add_argument('--mode', choices=['strict', 'closure'], default='strict')
        if name == 'reznick':
            sub.add_argument('--theta-max', type=int, default=DEFAULT_THETA_MAX)
        if name == 'verify':
            target = sub.add_mutually_exclusive_group(required=True)
            target.add_argument('--cert', help='certificate file to audit')
            target.add_argument('--witness', help='refutation witness file to audit')
            sub.add_argument('--tol', type=float, help='coefficient residual tolerance')
        if name == 'archimedean':
            sub.add_argument('--bound', type=float, help='largest K tried')
        elif name in ('certify', 'reznick', 'nnsd', 'fejer-riesz'):
            sub.add_argument('--bound', type=float, help='half-width of the sampling box for soundness checks')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"psatz: {e}", file=sys.stderr)
        return EXIT_CODES['usage']
    if not args.command:
        parser.print_help()
        return EXIT_CODES['usage']

    setup_logging(args.log_level)
    logger.info(f"Running {args.command} on {args.problem}")

    started = time.monotonic()
    try:
        code = COMMANDS[args.command](args)
        logger.info(f"{args.command} finished with exit code {code} in {format_duration(time.monotonic() - started)}")
        return code
    except ProblemFormatError as e:
        logger.error(f"Malformed input: {e}")
        print(f"psatz: malformed input: {e}", file=sys.stderr)
        return EXIT_CODES['usage']
    except PsatzError as e:
        logger.error(f"Invalid problem: {e}")
        print(f"psatz: {e}", file=sys.stderr)
        return EXIT_CODES['usage']


if __name__ == '__main__':
    sys.exit(main())
