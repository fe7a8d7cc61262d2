"""
Command-line interface.

    python -m tsunami_blowup run configs/example1.cfg --out results/ex1 --resolutions 1024,2048,4096
    python -m tsunami_blowup norms field.csv --s 1.5 --r 1 --column u --L 12.566370614359172
    python -m tsunami_blowup bounds --u0x -1 --beta 0.5

Exit status: 0 success, 1 failure, 2 invalid configuration.
"""

import argparse
import logging
import math
import sys
from dataclasses import replace
from typing import List, Optional

import pandas as pd

from tsunami_blowup.conformable import lifespan_estimate, riccati_blowup_bounds
from tsunami_blowup.experiments import ConfigError, parse_config, parse_real, run_experiment
from tsunami_blowup.grid_spectral import Field, PeriodicGrid, besov_norm, l2_norm, linf_norm, sobolev_norm

logger = logging.getLogger(__name__)


def _resolutions(text: str):
    try:
        return tuple(int(part) for part in text.split(',') if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _order(text: str):
    if text in ('inf', 'infinity'):
        return math.inf
    if text == '1':
        return 1
    raise argparse.ArgumentTypeError(f"r must be 1 or inf, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='tsunami_blowup',
        description='Conformable-time tsunami shallow-water lab: simulation, norms and blow-up bounds',
    )
    parser.add_argument('--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='run an experiment from a config file')
    run.add_argument('config', help='path to a key = value config file')
    run.add_argument('--out', help='output directory (overrides the config)')
    run.add_argument('--resolutions', type=_resolutions, help='e.g. 1024,2048,4096 (overrides the config)')

    norms = sub.add_parser('norms', help='norms of a sampled field')
    norms.add_argument('field_csv', help='CSV with the field column (and optionally x)')
    norms.add_argument('--s', type=float, required=True, help='regularity index')
    norms.add_argument('--r', type=_order, default=1, help='1 or inf')
    norms.add_argument('--column', default='u', help='column holding the samples')
    norms.add_argument('--L', type=parse_real, default=None, help='half width; inferred from x when omitted')

    bounds = sub.add_parser('bounds', help='Riccati blow-up times and lifespan gate')
    bounds.add_argument('--u0x', type=float, required=True, help='initial gradient at the symmetry point')
    bounds.add_argument('--beta', type=float, required=True)
    bounds.add_argument('--norm-u0', type=float, default=None, help='||U0|| in B^{3/2}_{2,1}')
    bounds.add_argument('--norm-theta', type=float, default=0.0, help='||theta|| in B^{3/2}_{2,1}')
    bounds.add_argument('--C0', type=float, default=1.0)
    return parser


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    overrides = {}
    if args.out:
        overrides['out'] = args.out
    if args.resolutions:
        overrides['resolutions'] = args.resolutions
    if overrides:
        config = replace(config, **overrides)
    return run_experiment(config)


def _cmd_norms(args) -> int:
    frame = pd.read_csv(args.field_csv)
    if args.column not in frame.columns:
        raise ValueError(f"{args.field_csv} has no column {args.column!r}")
    samples = frame[args.column].to_numpy()
    if args.L is not None:
        half_width = args.L
    elif 'x' in frame.columns:
        x = frame['x'].to_numpy()
        half_width = -float(x[0])
    else:
        raise ValueError("give --L or an x column")
    f = Field(PeriodicGrid(half_width, samples.size), samples)
    print(f"besov(s={args.s:g}, r={args.r}) = {besov_norm(f, args.s, args.r):.17g}")
    print(f"sobolev(s={args.s:g}) = {sobolev_norm(f, args.s):.17g}")
    print(f"l2 = {l2_norm(f):.17g}")
    print(f"linf = {linf_norm(f):.17g}")
    return 0


def _cmd_bounds(args) -> int:
    bounds = riccati_blowup_bounds(args.u0x, args.beta)
    print(f"T_paper = {bounds.t_paper:.17g}")
    print(f"T_sharp = {bounds.t_sharp:.17g}")
    if args.norm_u0 is not None:
        gate = lifespan_estimate(args.norm_u0, args.norm_theta, args.beta, args.C0)
        print(f"lifespan_gate = {gate:.17g}")
    return 0


COMMANDS = {'run': _cmd_run, 'norms': _cmd_norms, 'bounds': _cmd_bounds}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        logger.error(f"Invalid configuration: {exc}")
        return 2
    except (ValueError, OSError) as exc:
        logger.error(f"{args.command} failed: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
