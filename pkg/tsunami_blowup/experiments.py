"""
Experiment Configuration and Orchestration
==========================================
Run configuration files, the initial-data and bathymetry catalogs, and the
driver that runs the solvers and writes the result files.

Config grammar (one setting per line):
    key = value          # trailing comments allowed
Real values accept multiples of pi ("4*pi", "pi/2", "2pi"). Selectors take an
optional argument list, positional or named: "gaussian(0.5, 0.1, 1.0)",
"theta = gaussian(amp=0.2, width=2)", "custom(path=data/u0.csv)".

Output layout under `out`:
    res_{N}/series.csv             per-step records + criterion_integral
    res_{N}/snapshots/NNNN.csv     x, u, psi
    res_{N}/snapshots/index.csv    snapshot, t, s
    report.csv                     section, iteration, quantity, value

Column sets and their order are fixed; see docs/output_formats.md.
"""

import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from tsunami_blowup.conformable import frac_order
from tsunami_blowup.grid_spectral import Field, PeriodicGrid, besov_norm, derivative_samples
from tsunami_blowup.model import AdmissibilityError, ModelParams, PhysState, symmetrize
from tsunami_blowup.monitor import criterion_integral, detect_blowup, reconcile_bounds
from tsunami_blowup.solver_direct import SERIES_COLUMNS, StepperConfig, Trajectory, simulate
from tsunami_blowup.solver_picard import PicardConfig, picard_solve, uniform_bound_check

logger = logging.getLogger(__name__)

INITIAL_CATALOG = ('example1', 'example2', 'gaussian', 'wave', 'zero', 'custom')
THETA_CATALOG = ('zero', 'constant', 'gaussian')
SOLVERS = ('direct', 'picard', 'both')

# Positional argument names of each selector
SELECTOR_ARGS = {
    'example1': ('x0', 'psi_scale'),
    'example2': ('x0', 'psi_scale'),
    'gaussian': ('u_amp', 'psi_amp', 'width', 'psi_level'),
    'wave': ('u_amp', 'psi_level'),
    'zero': (),
    'custom': ('path',),
}
THETA_ARGS = {'zero': (), 'constant': ('level',), 'gaussian': ('amp', 'width')}

SERIES_FILE_COLUMNS = SERIES_COLUMNS + ['criterion_integral']
SNAPSHOT_COLUMNS = ['x', 'u', 'psi']
REPORT_COLUMNS = ['section', 'iteration', 'quantity', 'value']
FLOAT_FORMAT = '%.17g'


class ConfigError(ValueError):
    """Invalid run configuration; line is the 1-based line in the file (0 if unknown)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


# ----------------------------------------------------------------------------
# Initial data and bathymetry
# ----------------------------------------------------------------------------

def _example_psi(x):
    return 0.02 * (np.cos(x / 2.0 + np.pi) + 1.0)


def _example2_velocity(x):
    """-2x/(1-x^2)^2 exp(-1/(1-x^2)) on |x| < 1, exactly 0 elsewhere."""
    u = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    q = 1.0 - xi ** 2
    u[inside] = -2.0 * xi / q ** 2 * np.exp(-1.0 / q)
    return u


def initial_data(selector: str, grid: PeriodicGrid, **params) -> PhysState:
    """
    Sample a catalogued initial state.

    Args:
        selector: one of INITIAL_CATALOG
        grid: PeriodicGrid
        **params: selector arguments (see SELECTOR_ARGS); example1/example2
            accept x0 to move the symmetry point and
            psi_scale (0 gives the Burgers reduction)

    Returns:
        PhysState

    Raises:
        ValueError: unknown selector, missing arguments or a custom file of wrong length
    """
    x = np.array(grid.x)
    if selector in ('example1', 'example2'):
        xi = x - float(params.get('x0', 0.0))
        xi = (xi + grid.half_width) % grid.length - grid.half_width
        u = -xi * np.exp(-xi ** 2) if selector == 'example1' else _example2_velocity(xi)
        return PhysState.from_arrays(grid, u, float(params.get('psi_scale', 1.0)) * _example_psi(xi))
    if selector == 'gaussian':
        width = float(params.get('width', 1.0))
        if width <= 0:
            raise ValueError(f"gaussian width must be positive, got {width}")
        bump = np.exp(-(x / width) ** 2)
        u = float(params.get('u_amp', 1.0)) * bump
        psi = float(params.get('psi_amp', 0.0)) * bump + float(params.get('psi_level', 0.0))
        return PhysState.from_arrays(grid, u, psi)
    if selector == 'wave':
        u = float(params.get('u_amp', 0.01)) * np.sin(np.pi * x / grid.half_width)
        psi = np.full_like(x, float(params.get('psi_level', 0.25)))
        return PhysState.from_arrays(grid, u, psi)
    if selector == 'zero':
        return PhysState.from_arrays(grid, np.zeros_like(x), np.zeros_like(x))
    if selector == 'custom':
        if 'path' not in params:
            raise ValueError("custom initial data needs a path")
        frame = pd.read_csv(params['path'])
        missing = {'u', 'psi'} - set(frame.columns)
        if missing:
            raise ValueError(f"custom file {params['path']} lacks columns {sorted(missing)}")
        if len(frame) != grid.n_points:
            raise ValueError(f"custom file has {len(frame)} rows, grid has N={grid.n_points}")
        return PhysState.from_arrays(grid, frame['u'].to_numpy(), frame['psi'].to_numpy())
    raise ValueError(f"unknown initial data {selector!r}; choose from {INITIAL_CATALOG}")


def theta_field(selector: str, grid: PeriodicGrid, **params) -> Field:
    """Bathymetry from THETA_CATALOG."""
    if selector == 'zero':
        return Field.zeros(grid)
    if selector == 'constant':
        return Field.constant(grid, float(params.get('level', 1.0)))
    if selector == 'gaussian':
        width = float(params.get('width', 1.0))
        return Field.from_function(grid, lambda x: float(params.get('amp', 1.0)) * np.exp(-(x / width) ** 2))
    raise ValueError(f"unknown theta {selector!r}; choose from {THETA_CATALOG}")


# ----------------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------------

_NUMBER = r'(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?'
_REAL = re.compile(
    rf'\s*(?P<sign>[-+])?\s*(?:(?P<coef>{_NUMBER})\s*\*?\s*)?(?P<pi>pi)?\s*(?:/\s*(?P<div>{_NUMBER}))?\s*'
)
_SELECTOR = re.compile(r'\s*(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*(?:\((?P<args>.*)\))?\s*')


def parse_real(text: str) -> float:
    """Parse a real number, optionally a multiple or fraction of pi."""
    m = _REAL.fullmatch(text)
    if not m or not (m.group('coef') or m.group('pi')):
        raise ValueError(f"not a real number: {text!r}")
    value = float(m.group('coef') or 1.0)
    if m.group('pi'):
        value *= math.pi
    if m.group('div'):
        value /= float(m.group('div'))
    return -value if m.group('sign') == '-' else value


def parse_int(text: str) -> int:
    text = text.strip()
    if not re.fullmatch(r'[-+]?\d+', text):
        raise ValueError(f"not an integer: {text!r}")
    return int(text)


def parse_selector(text: str, catalog, arg_names: Dict[str, Tuple[str, ...]]):
    """Split 'name(a, k=b)' into (name, ((key, value), ...)); values are reals except path."""
    m = _SELECTOR.fullmatch(text)
    if not m:
        raise ValueError(f"malformed selector {text!r}")
    name = m.group('name')
    if name not in catalog:
        raise ValueError(f"unknown selector {name!r}; choose from {tuple(catalog)}")
    args = []
    raw = m.group('args')
    if raw and raw.strip():
        positional = arg_names.get(name, ())
        for i, item in enumerate(part.strip() for part in raw.split(',')):
            if '=' in item:
                key, value = (p.strip() for p in item.split('=', 1))
            elif i < len(positional):
                key, value = positional[i], item
            else:
                raise ValueError(f"too many arguments for {name}: {raw!r}")
            if key not in arg_names.get(name, ()):
                raise ValueError(f"{name} takes no argument {key!r}")
            args.append((key, value if key == 'path' else parse_real(value)))
    return name, tuple(args)


@dataclass(frozen=True)
class RunConfig:
    """
    Validated settings of one experiment.

    initial_params / theta_params are (key, value) pairs for the selectors;
    resolutions defaults to (N,).
    """

    beta: float = 1.0
    g: float = 1.0
    L: float = 10.0
    N: int = 2048
    t_end: float = 1.0
    ds: float = 1e-3
    cfl: float = 0.4
    snapshot_stride: int = 50
    filter_strength: float = 36.0
    gradient_cap: float = 1e4
    resolution_tol: float = 1e-3
    initial: str = 'example1'
    initial_params: Tuple[Tuple[str, object], ...] = ()
    theta: str = 'zero'
    theta_params: Tuple[Tuple[str, object], ...] = ()
    solver: str = 'direct'
    out: str = 'output'
    resolutions: Tuple[int, ...] = ()
    C0: float = 1.0
    picard_n_max: int = 20
    picard_tol: float = 1e-10
    picard_T: float = 0.1
    workers: int = 1

    def __post_init__(self):
        for f in fields(self):
            problem = _check(f.name, getattr(self, f.name))
            if problem:
                raise ConfigError(problem)

    @property
    def resolution_list(self) -> Tuple[int, ...]:
        return tuple(sorted(self.resolutions)) if self.resolutions else (self.N,)

    @property
    def x0(self) -> float:
        return float(dict(self.initial_params).get('x0', 0.0))

    def grid(self, n_points: Optional[int] = None) -> PeriodicGrid:
        return PeriodicGrid(self.L, n_points or self.N)

    def setup(self, n_points: Optional[int] = None) -> Tuple[PhysState, ModelParams]:
        grid = self.grid(n_points)
        state = initial_data(self.initial, grid, **dict(self.initial_params))
        params = ModelParams(theta=theta_field(self.theta, grid, **dict(self.theta_params)), beta=self.beta, g=self.g)
        return state, params

    def stepper_config(self) -> StepperConfig:
        return StepperConfig(
            ds=self.ds,
            cfl=self.cfl,
            t_end=self.t_end,
            snapshot_stride=self.snapshot_stride,
            filter_strength=self.filter_strength,
            gradient_cap=self.gradient_cap,
            resolution_tol=self.resolution_tol,
        )

    def picard_config(self) -> PicardConfig:
        return PicardConfig(
            n_max=self.picard_n_max,
            tol_l2=self.picard_tol,
            T=self.picard_T,
            stepper=replace(self.stepper_config(), snapshot_stride=1),
            C0=self.C0,
        )


def _positive(name):
    return lambda v: None if v > 0 else f"{name} must be positive, got {v}"


def _check_beta(v):
    try:
        frac_order(v)
    except ValueError as exc:
        return str(exc)
    return None


def _check_n(v):
    return None if v >= 8 and v % 2 == 0 else f"N must be an even integer >= 8, got {v}"


_CHECKS = {
    'beta': _check_beta,
    'g': _positive('g'),
    'L': _positive('L'),
    'N': _check_n,
    't_end': _positive('t_end'),
    'ds': _positive('ds'),
    'cfl': lambda v: None if 0 < v <= 1 else f"cfl must lie in (0,1], got {v}",
    'snapshot_stride': lambda v: None if v >= 1 else f"snapshot_stride must be >= 1, got {v}",
    'filter_strength': lambda v: None if v >= 0 else f"filter_strength must be >= 0, got {v}",
    'gradient_cap': _positive('gradient_cap'),
    'resolution_tol': _positive('resolution_tol'),
    'initial': lambda v: None if v in INITIAL_CATALOG else f"unknown initial data {v!r}",
    'theta': lambda v: None if v in THETA_CATALOG else f"unknown theta {v!r}",
    'solver': lambda v: None if v in SOLVERS else f"solver must be one of {SOLVERS}, got {v!r}",
    'out': lambda v: None if str(v).strip() else "out must be a directory name",
    'resolutions': lambda v: next((_check_n(n) for n in v if _check_n(n)), None),
    'C0': _positive('C0'),
    'picard_n_max': lambda v: None if v >= 1 else f"picard_n_max must be >= 1, got {v}",
    'picard_tol': _positive('picard_tol'),
    'picard_T': _positive('picard_T'),
    'workers': lambda v: None if v >= 1 else f"workers must be >= 1, got {v}",
}


def _check(name, value) -> Optional[str]:
    check = _CHECKS.get(name)
    return check(value) if check else None


def _parse_resolutions(text: str) -> Tuple[int, ...]:
    return tuple(parse_int(part) for part in text.split(',') if part.strip())


_PARSERS = {
    'beta': parse_real, 'g': parse_real, 'L': parse_real, 'N': parse_int, 't_end': parse_real,
    'ds': parse_real, 'cfl': parse_real, 'snapshot_stride': parse_int, 'filter_strength': parse_real,
    'gradient_cap': parse_real, 'resolution_tol': parse_real, 'solver': str.strip, 'out': str.strip,
    'resolutions': _parse_resolutions, 'C0': parse_real, 'picard_n_max': parse_int,
    'picard_tol': parse_real, 'picard_T': parse_real, 'workers': parse_int,
}


def parse_config(path) -> RunConfig:
    """
    Read a run configuration file.

    Args:
        path: config file path

    Returns:
        RunConfig with defaults for every key not given

    Raises:
        ConfigError: unknown key, malformed line or out-of-range value (with line number)
        OSError: unreadable file
    """
    values = {}
    with open(path, encoding='utf-8') as handle:
        lines = handle.read().splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, text = (part.strip() for part in line.split('=', 1))
        try:
            if key == 'initial':
                values['initial'], values['initial_params'] = parse_selector(text, INITIAL_CATALOG, SELECTOR_ARGS)
            elif key == 'theta':
                values['theta'], values['theta_params'] = parse_selector(text, THETA_CATALOG, THETA_ARGS)
            elif key in _PARSERS:
                values[key] = _PARSERS[key](text)
                problem = _check(key, values[key])
                if problem:
                    raise ValueError(problem)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(str(exc), lineno) from None

    config = RunConfig(**values)
    logger.debug(f"Parsed {path}: {config}")
    return config


# ----------------------------------------------------------------------------
# Running
# ----------------------------------------------------------------------------

def _simulate_resolution(config: RunConfig, n_points: int) -> Trajectory:
    state, params = config.setup(n_points)
    return simulate(state, params, config.stepper_config())


def run_refinement(config: RunConfig) -> List[Trajectory]:
    """Direct runs at every resolution of the config, in a process pool when workers > 1."""
    resolutions = config.resolution_list
    if config.workers > 1 and len(resolutions) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_simulate_resolution, [config] * len(resolutions), resolutions))
    return [_simulate_resolution(config, n) for n in resolutions]


def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def _row(section, quantity, value, iteration=''):
    return {'section': section, 'iteration': iteration, 'quantity': quantity, 'value': _format_value(value)}


def write_trajectory(trajectory: Trajectory, directory: Path) -> None:
    """series.csv and the snapshot files of one run."""
    snap_dir = directory / 'snapshots'
    snap_dir.mkdir(parents=True, exist_ok=True)
    series = trajectory.series.copy()
    series['criterion_integral'] = criterion_integral(trajectory).values
    series[SERIES_FILE_COLUMNS].to_csv(directory / 'series.csv', index=False, float_format=FLOAT_FORMAT)

    x = trajectory.grid.x
    index_rows = []
    for i, snap in enumerate(trajectory.snapshots):
        frame = pd.DataFrame({'x': x, 'u': snap.state.u.samples, 'psi': snap.state.psi.samples})
        frame.to_csv(snap_dir / f'{i:04d}.csv', index=False, float_format=FLOAT_FORMAT)
        index_rows.append({'snapshot': i, 't': snap.t, 's': snap.s})
    pd.DataFrame(index_rows, columns=['snapshot', 't', 's']).to_csv(
        snap_dir / 'index.csv', index=False, float_format=FLOAT_FORMAT
    )


def _blowup_rows(config: RunConfig, trajectories: List[Trajectory]) -> List[dict]:
    report = detect_blowup(trajectories, x0=config.x0, C0=config.C0)
    rows = [_row('blowup', key, value) for key, value in report.summary().items()]
    for record in report.per_resolution.to_dict('records'):
        section = f"res_{record['n_points']}"
        rows.extend(_row(section, key, value) for key, value in record.items() if key != 'n_points')

    if report.detected:
        state, params = config.setup(trajectories[-1].grid.n_points)
        grid = state.grid
        u0x = float(derivative_samples(state.u.samples, grid)[grid.nearest_index(config.x0)])
        try:
            sym = symmetrize(state, params)
        except AdmissibilityError as exc:
            logger.warning(f"Bounds not reconciled: {exc}")
            return rows
        if u0x < 0:
            verdicts = reconcile_bounds(
                report,
                u0x,
                config.beta,
                besov_norm(sym.u, 1.5, 1) + besov_norm(sym.v, 1.5, 1),
                besov_norm(params.theta, 1.5, 1),
                config.C0,
            )
            rows.extend(_row('bounds', r['quantity'], r['value']) for r in verdicts.as_rows())
    return rows


def _picard_rows(config: RunConfig) -> List[dict]:
    state, params = config.setup()
    picard = config.picard_config()
    sym = symmetrize(state, params, picard.delta)
    _, report = picard_solve(sym, params, picard)
    rows = []
    for record in report.table.to_dict('records'):
        n = int(record.pop('iteration'))
        rows.extend(_row('picard', key, value, iteration=n) for key, value in record.items())
    norm_U0 = besov_norm(sym.u, 1.5, 1) + besov_norm(sym.v, 1.5, 1)
    check = uniform_bound_check(report, norm_U0, besov_norm(params.theta, 1.5, 1), config.C0)
    rows.extend([
        _row('picard', 'verdict', report.verdict),
        _row('picard', 'residual', report.residual),
        _row('picard', 'residual_tol', report.residual_tol),
        _row('picard', 'cauchy_sum', report.cauchy_sum),
        _row('picard', 'uniform_bound_holds', check.holds),
        _row('picard', 'uniform_bound_margin', check.margin),
    ])
    return rows


def run_experiment(config: RunConfig) -> int:
    """
    Run the configured solvers and write the result files.

    Args:
        config: validated RunConfig

    Returns:
        int: exit status, 0 on success (a detected blow-up is a success)

    Raises:
        OSError: output directory cannot be written
        ValueError: solver preconditions (e.g. inadmissible data for Picard)
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    logger.info(f"Experiment: initial={config.initial}, beta={config.beta:g}, solver={config.solver}, out={out}")

    rows = []
    if config.solver in ('direct', 'both'):
        trajectories = run_refinement(config)
        for trajectory in trajectories:
            write_trajectory(trajectory, out / f'res_{trajectory.grid.n_points}')
        rows.extend(_blowup_rows(config, trajectories))
    if config.solver in ('picard', 'both'):
        rows.extend(_picard_rows(config))

    pd.DataFrame(rows, columns=REPORT_COLUMNS).to_csv(out / 'report.csv', index=False)
    logger.info(f"Wrote {out / 'report.csv'} ({len(rows)} rows)")
    return 0
