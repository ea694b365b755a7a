"""Command line: analyze one pair, scan a range of pairs, run the verification suites."""

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from sympy import primerange

from triquad.config import Config, OUTPUT_FORMATS
from triquad.errors import PreconditionError, InconsistencyError, InconclusiveError, TriquadError
from triquad.quadratic import QuadUnit
from triquad.report import csv_row, render, render_csv, render_text, to_json, to_json_line
from triquad.theorems import analyze_pair
from triquad.unit_cache import UnitCache
from triquad.verify import VerificationSystem

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PRECONDITION = 2
EXIT_INCONSISTENT = 3

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _parse_signs(value):
    try:
        signs = tuple(int(s) for s in value.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected four comma-separated signs, got '{value}'")
    if len(signs) != 4 or any(s not in (-1, 1) for s in signs):
        raise argparse.ArgumentTypeError(f"expected four values in {{-1, 1}}, got '{value}'")
    return signs


def _parse_residues(value):
    try:
        residues = tuple(int(s) for s in value.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'r1,r2' residues mod 8, got '{value}'")
    if len(residues) != 2 or any(r not in (1, 5) for r in residues):
        raise argparse.ArgumentTypeError(f"residues mod 8 must be 1 or 5, got '{value}'")
    return residues


def build_parser():
    parser = argparse.ArgumentParser(
        prog='triquad',
        description='Units and 2-class numbers of Q(sqrt2, sqrt p1, sqrt p2) and Q(sqrt2, sqrt p1, sqrt p2, i)')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    parser.add_argument('--quiet', action='store_true', help='Warnings only, no progress bars')
    parser.add_argument('--format', choices=OUTPUT_FORMATS, default=None)
    parser.add_argument('--cache', type=str, default=None, help='Unit cache file')
    parser.add_argument('--workers', type=int, default=None)
    parser.add_argument('--precision', type=int, default=None,
                        help='First guard-bit level of the precision ladder')
    sub = parser.add_subparsers(dest='command', required=True)

    analyze_cmd = sub.add_parser('analyze', help='Full case report for one pair')
    analyze_cmd.add_argument('--p1', type=int, required=True)
    analyze_cmd.add_argument('--p2', type=int, required=True)

    scan_cmd = sub.add_parser('scan', help='One row per pair of primes = 1 (mod 4) up to --max')
    scan_cmd.add_argument('--max', dest='max_prime', type=int, required=True)
    scan_cmd.add_argument('--sig', type=_parse_signs, default=None, help='Keep pairs with this n1,n2,n3,n4')
    scan_cmd.add_argument('--mod8', type=_parse_residues, default=None, help='Keep pairs with p1,p2 = r1,r2 (mod 8)')

    verify_cmd = sub.add_parser('verify', help='Run a verification suite')
    verify_cmd.add_argument('suite', choices=['table1', 'sweep', 'index'])
    verify_cmd.add_argument('--bound', type=int, default=None)
    verify_cmd.add_argument('--pair-bound', type=int, default=None,
                            help='Prime bound for the pair checks of the sweep')
    verify_cmd.add_argument('--out', type=str, default=None, help='Directory for the result files')
    return parser


def setup_logging(verbose=False, quiet=False):
    level = os.getenv('TRIQUAD_LOG_LEVEL', 'INFO').upper()
    if verbose:
        level = 'DEBUG'
    elif quiet:
        level = 'WARNING'
    handlers = [logging.StreamHandler(sys.stderr)]
    log_file = os.getenv('TRIQUAD_LOG_FILE')
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def load_config(args):
    overrides = {
        'output_format': args.format,
        'cache_path': args.cache,
        'workers': args.workers,
        'precision_start': args.precision,
    }
    if args.precision is not None:
        overrides['precision_max'] = max(args.precision, Config.from_env().precision_max)
    return Config.from_env(**overrides)


def _error(e):
    kind = {PreconditionError: 'precondition', InconsistencyError: 'inconsistency',
            InconclusiveError: 'inconclusive'}.get(type(e), 'error')
    return {'error': kind, 'message': str(e)}


def exit_code(e):
    return EXIT_PRECONDITION if isinstance(e, PreconditionError) else EXIT_INCONSISTENT


def qualifying_pairs(max_prime, mod8=None):
    primes = [p for p in primerange(5, max_prime + 1) if p % 4 == 1]
    for i, p1 in enumerate(primes):
        for p2 in primes[i + 1:]:
            if mod8 is None or (p1 % 8, p2 % 8) == mod8:
                yield p1, p2


_worker_cache = None


def _init_worker(config):
    global _worker_cache
    if os.path.exists(config.cache_path):
        _worker_cache = UnitCache(config.cache_path, read_only=True)


def _scan_pair(task):
    """Analyze one pair; returns the report payload and the units for the parent to store."""
    p1, p2, config = task
    try:
        report = analyze_pair(p1, p2, config, _worker_cache)
    except TriquadError as e:
        return (p1, p2), None, _error(e), []
    return (p1, p2), report_payload(report), None, list(report.units.values())


def report_payload(report):
    return {'row': csv_row(report), 'json': report.to_dict(), 'text': render_text(report),
            'signature': report.signature.as_tuple()}


def cmd_analyze(args, config, cache):
    report = analyze_pair(args.p1, args.p2, config, cache)
    sys.stdout.write(render([report], config.output_format))
    return EXIT_OK


def cmd_scan(args, config, cache):
    if args.max_prime < 13:
        raise PreconditionError(f"--max must be at least 13, got {args.max_prime}")
    tasks = [(p1, p2, config) for p1, p2 in qualifying_pairs(args.max_prime, args.mod8)]
    logger.info(f"Scanning {len(tasks)} pairs with {config.workers} worker(s)")
    if config.output_format == 'csv':
        sys.stdout.write(render_csv([], header=True))
    status = EXIT_OK
    global _worker_cache
    if config.workers > 1:
        executor = ProcessPoolExecutor(max_workers=config.workers, initializer=_init_worker,
                                       initargs=(config,))
        results = executor.map(_scan_pair, tasks)
    else:
        executor = None
        _worker_cache = cache
        results = map(_scan_pair, tasks)
    try:
        for pair, payload, error, units in results:
            for record in units:
                if cache is not None:
                    cache.put(QuadUnit.from_dict(record))
            if error is not None:
                sys.stderr.write(json.dumps(dict(error, pair=list(pair)), sort_keys=True) + '\n')
                status = EXIT_INCONSISTENT
                continue
            if args.sig is not None and payload['signature'] != args.sig:
                continue
            if config.output_format == 'csv':
                sys.stdout.write(render_csv([payload['row']], header=False))
            elif config.output_format == 'json':
                sys.stdout.write(to_json_line(payload['json']) + '\n')
            else:
                sys.stdout.write(payload['text'] + '\n')
            sys.stdout.flush()
    finally:
        if executor is not None:
            executor.shutdown()
    return status


def cmd_verify(args, config, cache, quiet=False):
    system = VerificationSystem(config, cache, results_dir=args.out, progress=not quiet)
    if args.suite == 'table1':
        system.run_table1()
    elif args.suite == 'sweep':
        system.sweep_properties(args.bound or 500, args.pair_bound)
    else:
        system.run_index(args.bound or 200)
    summary = system.save()
    sys.stdout.write(to_json(summary) + '\n')
    if system.failures:
        sys.stderr.write(f"{len(system.failures)} verification failures, see {summary['results_csv']}\n")
        return EXIT_FAILED
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose, args.quiet)
    try:
        config = load_config(args)
        cache = UnitCache(config.cache_path)
        if args.command == 'analyze':
            return cmd_analyze(args, config, cache)
        if args.command == 'scan':
            return cmd_scan(args, config, cache)
        return cmd_verify(args, config, cache, quiet=args.quiet)
    except TriquadError as e:
        logger.error(f"{args.command} failed: {e}")
        sys.stderr.write(json.dumps(_error(e), sort_keys=True) + '\n')
        return exit_code(e)
    except OSError as e:
        logger.error(f"I/O error: {e}")
        sys.stderr.write(json.dumps({'error': 'io', 'message': str(e)}, sort_keys=True) + '\n')
        return EXIT_FAILED
