# cli.py
import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
from rich.console import Console

from core.config import load_settings
from core.density import DIRECTIONS, METHODS, UPPER
from core.errors import LabError, NumericErrorHandler
from core.euler import TAIL_ANALYTIC, TAIL_MODES, ModelConfig
from core.saddle import tau_from_t

debug_logger = logging.getLogger('satotate_debug')

CSV_COMMANDS = ('density', 'scan')
DENSITY_COLUMNS = ('x', 'n_inversion', 'n_gaussian', 'log_m')

MESSAGES = {
    'it': {
        'written': "💾 Scritto {path}",
        'manifest': "🧾 Manifest: {path}",
        'verify_ok': "✅ Tutte le verifiche superate",
        'verify_failed': "❌ Verifiche fallite: {count}",
        'unexpected': "❌ Errore inatteso: {detail} (dettagli nel log di debug)",
    },
    'en': {
        'written': "💾 Wrote {path}",
        'manifest': "🧾 Manifest: {path}",
        'verify_ok': "✅ All checks passed",
        'verify_failed': "❌ Failed checks: {count}",
        'unexpected': "❌ Unexpected error: {detail} (details in the debug log)",
    },
}


class UsageError(ValueError):
    """Bad flag combination detected after argparse."""


def format_float(value):
    return f"{value:.17g}"


def _plain(obj):
    """numpy scalars and arrays to Python; non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def to_json(record):
    # repr of a float is the shortest string that round-trips the binary64 value
    return json.dumps(_plain(record), indent=2, sort_keys=True, allow_nan=False) + '\n'


def to_csv(columns, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow(['' if v is None else format_float(v) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    return buffer.getvalue()


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--sigma', type=float, default=1.0, help="real part sigma in (1/2, 1]")
    common.add_argument('--prime-cutoff', type=int, default=None, help="fixed prime cutoff P (default: automatic)")
    common.add_argument('--quad-order', type=int, default=64, help="base Gauss-Legendre order")
    common.add_argument('--tail-mode', choices=TAIL_MODES, default=TAIL_ANALYTIC)
    common.add_argument('--seed', type=int, default=None, help="Monte Carlo seed (default: SATOTATE_SEED)")
    common.add_argument('--out', type=Path, default=None, help="output file; stdout when omitted")
    common.add_argument('--format', choices=('json', 'csv'), default=None)
    common.add_argument('--lang', choices=('en', 'it'), default=None)
    common.add_argument('--threads', type=int, default=None, help="worker threads (overrides SATOTATE_THREADS)")
    common.add_argument('--log-level', choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'), default=None)
    return common


def _add_level(parser):
    level = parser.add_mutually_exclusive_group(required=True)
    level.add_argument('--tau', type=float)
    level.add_argument('--t', type=float, help="sigma = 1 only: tau = 2 log t + 2 gamma")


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog='satotate-cli',
                                     description="Numerical lab for random Euler products at sigma in (1/2, 1].")
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('constants', parents=[common], help="expansion constants g_{n,j}(sigma) and A(sigma)")

    saddle = sub.add_parser('saddle', parents=[common], help="saddle point kappa(sigma, tau)")
    _add_level(saddle)
    saddle.add_argument('--terms', type=int, choices=(1, 2), default=2)

    density = sub.add_parser('density', parents=[common], help="tilted density N(x; tau) as CSV")
    _add_level(density)
    density.add_argument('--x-min', type=float, default=None)
    density.add_argument('--x-max', type=float, default=None)
    density.add_argument('--x-points', type=int, default=161)

    tail = sub.add_parser('tail', parents=[common], help="log Phi(sigma, tau) by every method")
    _add_level(tail)
    tail.add_argument('--methods', choices=('all',) + METHODS, default='all')
    tail.add_argument('--direction', choices=DIRECTIONS, default=UPPER)
    tail.add_argument('--terms', type=int, choices=(1, 2), default=2)
    tail.add_argument('--n', type=int, default=10 ** 4, help="Monte Carlo cross-check samples (0 disables)")

    sample = sub.add_parser('sample', parents=[common], help="Monte Carlo draws of log L")
    sample.add_argument('--n', type=int, default=10 ** 4)
    sample.add_argument('--kappa', type=float, default=0.0, help="exponential tilt")
    sample.add_argument('--raw', action='store_true', help="also write the draws as <out>.raw.csv")

    scan = sub.add_parser('scan', parents=[common], help="tail table over a range of tau")
    scan.add_argument('--tau-min', type=float, required=True)
    scan.add_argument('--tau-max', type=float, required=True)
    scan.add_argument('--tau-steps', type=int, default=10)
    scan.add_argument('--terms', type=int, choices=(1, 2), default=2)

    verify = sub.add_parser('verify', parents=[common], help="acceptance suite")
    verify.add_argument('--quick', action='store_true', help="skip the Monte Carlo checks")
    return parser


def _level(args):
    if args.t is None:
        return args.tau
    if args.sigma != 1.0:
        raise UsageError("--t is only defined for --sigma 1")
    if args.t <= 0.0:
        raise UsageError("--t must be positive")
    return tau_from_t(args.t)


def _model(args):
    return ModelConfig(sigma=args.sigma, prime_cutoff=args.prime_cutoff, quadrature_order=args.quad_order,
                       tail_mode=args.tail_mode)


def _emit(console, orchestrator, args, text, extra=()):
    """Write text to --out (plus the manifest) or to stdout."""
    msg = MESSAGES[orchestrator.lang]
    if args.out is None:
        sys.stdout.write(text)
        orchestrator.write_manifest([])
        return
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text)
    outputs = [args.out, *extra]
    manifest = orchestrator.write_manifest(outputs)
    for path in outputs:
        console.print(msg['written'].format(path=path))
    console.print(msg['manifest'].format(path=manifest))


def _with_manifest(orchestrator, record):
    return {**record, 'manifest': orchestrator.manifest.reproducible_part()}


def run(args, orchestrator, console):
    command = args.command
    fmt = args.format or ('csv' if command in CSV_COMMANDS else 'json')
    if fmt == 'csv' and command not in CSV_COMMANDS:
        raise UsageError(f"--format csv is available for {', '.join(CSV_COMMANDS)} only")
    if args.command == 'sample' and args.raw and args.out is None:
        raise UsageError("--raw needs --out")

    if command == 'constants':
        record = orchestrator.constants(args.sigma)
        _emit(console, orchestrator, args, to_json(_with_manifest(orchestrator, record)))

    elif command == 'saddle':
        record = orchestrator.saddle(_model(args), _level(args), args.terms)
        _emit(console, orchestrator, args, to_json(_with_manifest(orchestrator, record)))

    elif command == 'density':
        x_grid = None
        if args.x_min is not None or args.x_max is not None:
            if args.x_min is None or args.x_max is None or not args.x_min < args.x_max:
                raise UsageError("--x-min and --x-max go together, with x-min < x-max")
            x_grid = np.linspace(args.x_min, args.x_max, args.x_points)
        curve = orchestrator.density(_model(args), _level(args), x_grid)
        if fmt == 'csv':
            text = to_csv(DENSITY_COLUMNS, curve.rows())
        else:
            record = {name: getattr(curve, name) for name in (
                'sigma', 'tau', 'kappa', 'x', 'n_inversion', 'n_gaussian', 'log_m', 'truncation_v',
                'estimated_inversion_error', 'mass', 'mean', 'variance', 'f2', 'decay_rate', 'error_scale')}
            text = to_json(_with_manifest(orchestrator, record))
        _emit(console, orchestrator, args, text)

    elif command == 'tail':
        record = orchestrator.tail(_model(args), _level(args), args.methods, args.direction, args.terms,
                                   args.n, args.seed)
        _emit(console, orchestrator, args, to_json(_with_manifest(orchestrator, record)))

    elif command == 'sample':
        draws = orchestrator.sample(_model(args), args.n, args.kappa, args.seed)
        extra = []
        if args.raw:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            raw_path = args.out.with_name(args.out.stem + '.raw.csv')
            raw_path.write_text(to_csv(('log_l',), ((v,) for v in draws.values)))
            extra.append(raw_path)
        _emit(console, orchestrator, args, to_json(_with_manifest(orchestrator, draws.summary())), extra)

    elif command == 'scan':
        from core.orchestrator import SCAN_COLUMNS

        rows = orchestrator.scan(_model(args), args.tau_min, args.tau_max, args.tau_steps, args.terms)
        if fmt == 'csv':
            text = to_csv(SCAN_COLUMNS, ([row[c] for c in SCAN_COLUMNS] for row in rows))
        else:
            text = to_json(_with_manifest(orchestrator, {'rows': rows}))
        _emit(console, orchestrator, args, text)

    elif command == 'verify':
        from core.verify import render_table

        results = orchestrator.verify(args.quick)
        console.print(render_table(results, orchestrator.lang))
        failed = [r for r in results if not r.passed]
        msg = MESSAGES[orchestrator.lang]
        if failed:
            console.print(msg['verify_failed'].format(count=len(failed)), style="bold red")
        else:
            console.print(msg['verify_ok'], style="bold green")
        if args.out is not None:
            record = {'checks': [asdict(r) for r in results], 'passed': not failed}
            _emit(console, orchestrator, args, to_json(_with_manifest(orchestrator, record)))
        else:
            orchestrator.write_manifest([])
        return 1 if failed else 0
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    console = Console(stderr=True)

    try:
        settings = load_settings(threads=args.threads, log_level=args.log_level, lang=args.lang, seed=args.seed)
    except LabError as exc:
        console.print(NumericErrorHandler.get_user_message('usage_error', args.lang or 'en', str(exc)),
                      style="bold red")
        return 2
    os.environ['SATOTATE_THREADS'] = str(settings.threads)

    from core.orchestrator import Orchestrator

    orchestrator = Orchestrator(settings)
    try:
        return run(args, orchestrator, console)
    except UsageError as exc:
        console.print(NumericErrorHandler.get_user_message('usage_error', orchestrator.lang, str(exc)),
                      style="bold red")
        return 2
    except (LabError, ValueError, ArithmeticError) as exc:
        console.print(NumericErrorHandler.report(exc, orchestrator.lang), style="bold red")
        return NumericErrorHandler.exit_code(exc)
    except Exception as exc:
        debug_logger.exception(f"❌ unexpected failure in {args.command}")
        console.print(MESSAGES[orchestrator.lang]['unexpected'].format(detail=exc), style="bold red")
        return 1


if __name__ == "__main__":
    sys.exit(main())
