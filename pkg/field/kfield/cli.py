# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of the kfield command line

    kfield [--config FILE] [--set path=value ...] [-v] COMMAND

COMMAND is one of derive, residual, simulate, cosim, convergence, check.
Reports go to stdout as JSON (sorted keys), tables and trajectories as CSV
with 17 significant digits, logs to stderr.
Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 failed checks.
"""

import argparse
import csv
import json
import logging
import sys

import numpy as np

import kfield
from kfield.checks import run_checks
from kfield.config import ConfigError, RunConfig
from kfield.core.fieldeq import residual
from kfield.core.geometry import cosymplectic_axioms_check, energy_differential, omega, theta
from kfield.core.integrator import CFLViolation, NewtonDivergence, convergence_study, cosimulate_doubled, simulate
from kfield.core.jet import parse_point, prolonged_second_jet, second_jet_of_section
from kfield.core.lagrangian import energy, regularity

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CHECKS = 4


def _plain(obj):
    """numpy containers and scalars to JSON types."""
    if isinstance(obj, dict):
        return dict((str(key), _plain(value)) for key, value in obj.items())
    if isinstance(obj, (list, tuple)):
        return [_plain(item) for item in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if hasattr(obj, 'flat') and callable(obj.flat):
        return _plain(obj.flat())
    return obj


def _fmt(value):
    return format(float(value), '.17g')


def _emit_json(report, out):
    out.write(json.dumps(_plain(report), sort_keys=True, indent=2))
    out.write('\n')


def cmd_derive(config, args, out):
    L, F = config.build_model()
    text = args.point if args.point is not None else config['derive']['point']
    p = parse_point(text, L.n, L.k)
    axioms = cosymplectic_axioms_check(L, p)
    report = {
        'model': L.name,
        'point': dict(zip(['x', 'q', 'qd'], [p.x, p.q, p.qd])),
        'theta': [theta(L, p, mu).to_dict() for mu in range(L.k)],
        'omega': [[list(entry) for entry in omega(L, p, mu).nonzero()] for mu in range(L.k)],
        'energy': float(energy(L, p)),
        'dE': energy_differential(L, p).to_dict(),
        'regular': regularity(L, p),
        'axioms': axioms,
    }
    _emit_json(report, out)
    return EXIT_OK


def cmd_residual(config, args, out):
    L, F = config.build_model()
    kind = config['residual']['kind']
    data = config.build_initial_data(L, F)
    variation = config.build_initial_data(L, F, 'variation') if kind in ('jacobi', 'adjoint') else None
    records = []
    for point in config['residual']['points']:
        if variation is None:
            j2 = second_jet_of_section(data.section, point)
        else:
            j2 = prolonged_second_jet(data.section, variation.section, point)
        records.append({'point': point, 'residual': residual(kind, L, F, j2)})
    _emit_json({'kind': kind, 'model': L.name, 'records': records}, out)
    return EXIT_OK


def write_trajectory(state, path, every):
    """Trajectory CSV with header t,x,field,value."""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['t', 'x', 'field', 'value'])
        for t, x, name, value in state.trajectory_rows(every):
            writer.writerow([_fmt(t), _fmt(x), name, _fmt(value)])


def _march(config, doubled, out):
    L, F = config.build_model()
    grid = config.build_grid()
    bc = config.build_bc()
    scheme = config.build_scheme()
    data_q = config.build_initial_data(L, F)
    if doubled:
        data_v = config.build_initial_data(L, F, 'variation')
        state, diagnostics = cosimulate_doubled(L, F, data_q, data_v, grid, bc, scheme)
    else:
        state, diagnostics = simulate(L, F, data_q, grid, bc, scheme)
    path = config['output']['path']
    if path:
        write_trajectory(state, path, config['output']['every'])
        diagnostics['trajectory'] = path
        logger.info('trajectory written to %s', path)
    _emit_json(diagnostics, out)
    return EXIT_OK


def cmd_simulate(config, args, out):
    return _march(config, False, out)


def cmd_cosim(config, args, out):
    return _march(config, True, out)


def cmd_convergence(config, args, out):
    L, F = config.build_model()
    grid = config.build_grid()
    data_q = config.build_initial_data(L, F)
    levels = [tuple(level) for level in config['convergence']['levels']]
    table = convergence_study(L, F, data_q, grid.t_end, grid.x_min, grid.x_max, levels,
                              config.build_bc(), config.build_scheme())
    path = config['output']['path']
    f = open(path, 'w', newline='') if path else out
    try:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['nt', 'nx', 'h', 'error', 'order'])
        for row in table:
            order = '' if row['order'] is None else _fmt(row['order'])
            writer.writerow([row['nt'], row['nx'], _fmt(row['h']), _fmt(row['error']), order])
    finally:
        if path:
            f.close()
    return EXIT_OK


def cmd_check(config, args, out):
    seed = args.seed if args.seed is not None else config['seed']
    results = run_checks(seed)
    failed = [name for name, passed, _ in results if not passed]
    for name, passed, detail in results:
        out.write('{:<4} {:<40} {}\n'.format('ok' if passed else 'FAIL', name, detail))
    out.write('{} of {} checks passed (seed {})\n'.format(len(results) - len(failed), len(results), seed))
    return EXIT_CHECKS if failed else EXIT_OK


COMMANDS = {
    'derive': (cmd_derive, 'geometry report of the model at one jet point'),
    'residual': (cmd_residual, 'field equation residuals of the initial data section'),
    'simulate': (cmd_simulate, 'discrete variational march of the fields'),
    'cosim': (cmd_cosim, 'march of the doubled (field, variation) system'),
    'convergence': (cmd_convergence, 'error table on a sequence of grids'),
    'check': (cmd_check, 'bundled invariant checks'),
}


def build_parser():
    parser = argparse.ArgumentParser(prog='kfield', description='Lagrangian field theories on first jets: '
                                     'geometry, prolongation, forces and discrete variational integration.')
    parser.add_argument('--version', action='version', version='kfield {}'.format(kfield.__version__))
    parser.add_argument('-c', '--config', default=None, help='JSON or YAML run configuration')
    parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='PATH=VALUE',
                        help='override a configuration key, e.g. --set grid.nt=401')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v info, -vv debug logging')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True
    for name, (_, text) in COMMANDS.items():
        cmd = sub.add_parser(name, help=text)
        if name == 'derive':
            cmd.add_argument('--point', default=None, help="jet point, e.g. 'q1=0.5,q1_2=3'")
        if name == 'check':
            cmd.add_argument('--seed', type=int, default=None, help='overrides the configured seed')
    return parser


def main(argv=None, out=None):
    """
    Runs one command

        Args:
            argv (list(str) or None): arguments, sys.argv[1:] when None
            out (file or None): report stream, stdout when None

        Returns:
            status (int): exit code
    """
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')
    try:
        config = RunConfig.load(args.config, args.overrides)
        return COMMANDS[args.command][0](config, args, out)
    except ConfigError as err:
        logger.error('configuration error: %s', err)
        return EXIT_CONFIG
    except (NewtonDivergence, CFLViolation, FloatingPointError, np.linalg.LinAlgError) as err:
        logger.error('numerical failure: %s', err)
        return EXIT_NUMERIC
    except ValueError as err:
        logger.error('%s', err)
        return EXIT_NUMERIC


if __name__ == '__main__':
    sys.exit(main())
