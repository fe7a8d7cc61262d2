"""
Direct Pseudospectral Solver
============================
Method-of-lines integration of the tsunami system for any order beta in (0, 1].

The conformable derivative turns into d/ds under s = t^beta / beta, so the
solver integrates the classical (beta = 1) system in s with RK4, spectral
derivatives, 2/3-rule dealiased products and an exponential filter applied
once per step. Physical time is metadata: every record and snapshot carries
both t and s.

Steps adapt to ds = min(ds_base, cfl * dx / max(|u| + sqrt(g (psi + theta)))),
and are shortened to land exactly on requested snapshot times and on t_end.

A run ends at t_end, or is truncated when
- a stage produces NaN or infinite values ("non-finite"),
- the steepening gradient -min u_x exceeds the gradient cap ("gradient-cap"),
- the spectral tail of u or psi in [k_max/3, k_max/2] outgrows the guard
  level, i.e. the grid no longer resolves the steepening front ("resolution"),
- the step budget is exhausted ("max-steps").

Only compression can blow up: positive gradients decay along characteristics,
so the cap watches -min u_x rather than ||u_x||_inf (compactly supported data
may start with a steep rarefaction flank). The guard level is

    max(resolution_tol, min(resolution_growth * tail_0, GUARD_CEILING))

so under-resolved initial data raise the guard by a fixed factor at most,
never past GUARD_CEILING. With a cap inside the resolvable range the cap
fires first and the guard only catches runs whose front outpaces the grid.

Optionally, Lagrangian labels (the initial grid) are carried along with
dX/ds = u(X, s); their compression dX/dxi locates the collapsing characteristic.

References:
-----------
Trefethen, L. N. (2000). Spectral methods in MATLAB. SIAM. (Chapter 10)

Hou, T. Y., & Li, R. (2007). Computing nearly singular solutions using
    pseudo-spectral methods. J. Comput. Phys. 226, 379-397.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from tsunami_blowup.conformable import time_forward_map, time_inverse_map
from tsunami_blowup.grid_spectral import (
    PeriodicGrid,
    derivative_samples,
    exponential_filter,
    spectral_tail_ratio,
)
from tsunami_blowup.model import (
    DELTA_FLOOR,
    ModelParams,
    PhysState,
    physical_tendency,
    symmetric_tendency,
    symmetrize,
)

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ['t', 's', 'min_ux', 'argmin_x', 'linf_ux', 'linf_psix', 'mass', 'momentum']
FORMULATIONS = ('physical', 'symmetric')
TRUNCATION_REASONS = ('gradient-cap', 'resolution', 'non-finite', 'max-steps')

# Relative slack used when landing on target times
_LANDING_TOL = 1e-12

# Highest level the initial-tail scaling may lift the resolution guard to
GUARD_CEILING = 0.1


class BlowupFlag(RuntimeError):
    """Raised by a step whose output is no longer finite."""


@dataclass(frozen=True)
class StepperConfig:
    """
    Settings of the direct solver.

    Args:
        ds: base step in rescaled time s
        cfl: Courant number in (0, 1]
        t_end: physical end time
        snapshot_stride: keep a field snapshot every this many steps
        filter_strength: alpha of exp(-alpha (|k|/k_max)^order); 0 disables the filter
        filter_order: order of the exponential filter
        gradient_cap: hard cap on the steepening gradient -min u_x
        resolution_tol: absolute floor of the spectral-tail guard; 1 disables it
        resolution_growth: allowed growth factor of the initial tail
        snapshot_times: extra physical times at which a snapshot is forced
        formulation: 'physical' (default, vacuum compatible) or 'symmetric'
        delta: admissibility floor for the symmetric formulation
        max_steps: step budget
        track_characteristics: advect Lagrangian labels alongside the fields
    """

    ds: float = 1e-3
    cfl: float = 0.4
    t_end: float = 1.0
    snapshot_stride: int = 50
    filter_strength: float = 36.0
    filter_order: int = 16
    gradient_cap: float = 1e4
    resolution_tol: float = 1e-3
    resolution_growth: float = 10.0
    snapshot_times: Tuple[float, ...] = ()
    formulation: str = 'physical'
    delta: float = DELTA_FLOOR
    max_steps: int = 2_000_000
    track_characteristics: bool = True

    def __post_init__(self):
        if not self.ds > 0:
            raise ValueError(f"ds must be positive, got {self.ds}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0,1], got {self.cfl}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        if self.filter_strength < 0:
            raise ValueError(f"filter_strength must be >= 0, got {self.filter_strength}")
        if not self.gradient_cap > 0:
            raise ValueError(f"gradient_cap must be positive, got {self.gradient_cap}")
        if not (self.resolution_tol > 0 and self.resolution_growth >= 1):
            raise ValueError("resolution_tol must be > 0 and resolution_growth >= 1")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}, got {self.formulation!r}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        object.__setattr__(self, 'snapshot_times', tuple(float(t) for t in self.snapshot_times))


@dataclass(frozen=True)
class Snapshot:
    t: float
    s: float
    state: PhysState


@dataclass(eq=False)
class Trajectory:
    """
    Output of simulate.

    series holds one row per accepted step (plus the initial row) with the
    columns of SERIES_COLUMNS. labels/positions are the Lagrangian labels and
    their final positions (unwrapped), or None when tracking was disabled.
    """

    grid: PeriodicGrid
    params: ModelParams
    snapshots: List[Snapshot]
    series: pd.DataFrame
    truncated: bool = False
    reason: str = 't_end'
    labels: Optional[np.ndarray] = None
    positions: Optional[np.ndarray] = None

    @property
    def beta(self) -> float:
        return self.params.beta

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def snapshot_at(self, t: float, rtol: float = 1e-12) -> Snapshot:
        """Snapshot recorded at physical time t."""
        for snap in self.snapshots:
            if abs(snap.t - t) <= rtol * max(1.0, abs(t)):
                return snap
        raise KeyError(f"no snapshot at t={t}")

    def compression(self) -> Optional[np.ndarray]:
        """dX/dxi of the Lagrangian map at the final state."""
        if self.positions is None:
            return None
        return np.gradient(self.positions, self.labels)


# ----------------------------------------------------------------------------
# Stepping
# ----------------------------------------------------------------------------

class _PhysicalSystem:
    """d/ds of (u, psi[, X])."""

    def __init__(self, params: ModelParams):
        self.grid = params.grid
        self.theta = params.theta.samples
        self.g = params.g

    def __call__(self, y):
        du, dpsi = physical_tendency(y[0], y[1], self.theta, self.g, self.grid)
        out = [du, dpsi]
        if len(y) > 2:
            out.append(_advect_labels(y[2], y[0], self.grid))
        return out

    def to_physical(self, y):
        return y[0], y[1]


class _SymmetricSystem:
    """d/ds of (u, v[, X])."""

    def __init__(self, params: ModelParams):
        self.grid = params.grid
        self.theta = params.theta.samples
        self.theta_x = params.theta_x()
        self.g = params.g

    def __call__(self, y):
        du, dv = symmetric_tendency(y[0], y[1], self.theta_x, self.g, self.grid)
        out = [du, dv]
        if len(y) > 2:
            out.append(_advect_labels(y[2], y[0], self.grid))
        return out

    def to_physical(self, y):
        return y[0], 0.25 * y[1] ** 2 - self.theta


def _advect_labels(positions, u, grid: PeriodicGrid):
    return np.interp(positions, grid.x, u, period=grid.length)


def _rk4(system, y, ds, filt):
    k1 = system(y)
    k2 = system([a + 0.5 * ds * k for a, k in zip(y, k1)])
    k3 = system([a + 0.5 * ds * k for a, k in zip(y, k2)])
    k4 = system([a + ds * k for a, k in zip(y, k3)])
    out = [a + ds / 6.0 * (p + 2.0 * q + 2.0 * r + w) for a, p, q, r, w in zip(y, k1, k2, k3, k4)]
    n = system.grid.n_points
    # Fields are filtered, label positions are not
    for i in range(2):
        if filt is not None:
            out[i] = np.fft.irfft(np.fft.rfft(out[i]) * filt, n=n)
    if not all(np.all(np.isfinite(a)) for a in out):
        raise BlowupFlag("non-finite values after RK4 step")
    return out


def _filter_table(grid, strength, order):
    return exponential_filter(grid, float(strength), int(order)) if strength > 0 else None


def rk4_step(
    state: PhysState,
    params: ModelParams,
    ds: float,
    filter_strength: float = 36.0,
    filter_order: int = 16,
) -> PhysState:
    """
    One classical RK4 step in rescaled time, then the exponential filter.

    Args:
        state: finite physical state
        params: model parameters
        ds: step in s
        filter_strength: filter coefficient (0 disables it)
        filter_order: filter order

    Returns:
        PhysState after the step

    Raises:
        BlowupFlag: if the step produces non-finite values
    """
    system = _PhysicalSystem(params)
    filt = _filter_table(state.grid, filter_strength, filter_order)
    u, psi = _rk4(system, [state.u.samples, state.psi.samples], ds, filt)
    return PhysState.from_arrays(state.grid, u, psi)


def refined_minimum(values: np.ndarray, grid: PeriodicGrid) -> Tuple[float, float]:
    """Minimum of periodic samples and its location, refined by a 3-point parabola."""
    n = values.size
    i = int(np.argmin(values))
    a, b, c = values[(i - 1) % n], values[i], values[(i + 1) % n]
    curvature = a - 2.0 * b + c
    if curvature > 0:
        offset = 0.5 * (a - c) / curvature
        value = b - 0.25 * (a - c) * offset
    else:
        offset, value = 0.0, b
    x = grid.x[i] + offset * grid.dx
    x = (x + grid.half_width) % grid.length - grid.half_width
    return float(value), float(x)


def _record(u, psi, grid, s, beta):
    ux = derivative_samples(u, grid)
    psix = derivative_samples(psi, grid)
    min_ux, argmin_x = refined_minimum(ux, grid)
    return {
        't': time_inverse_map(s, beta),
        's': s,
        'min_ux': min_ux,
        'argmin_x': argmin_x,
        'linf_ux': float(np.max(np.abs(ux))),
        'linf_psix': float(np.max(np.abs(psix))),
        'mass': float(np.sum(psi) * grid.dx),
        'momentum': float(np.sum(u) * grid.dx),
    }


def _tail(u, psi, grid):
    return max(spectral_tail_ratio(u, grid), spectral_tail_ratio(psi, grid))


def _stable_step(u, psi, theta, g, grid, cfl, ds_base):
    depth = np.maximum(psi + theta, 0.0)
    speed = float(np.max(np.abs(u) + np.sqrt(g * depth)))
    if speed == 0.0:
        return ds_base
    return min(ds_base, cfl * grid.dx / speed)


def _targets(config: StepperConfig, beta: float) -> List[float]:
    times = [t for t in config.snapshot_times if 0 < t < config.t_end]
    return sorted({time_forward_map(t, beta) for t in times} | {time_forward_map(config.t_end, beta)})


def simulate(initial: PhysState, params: ModelParams, config: StepperConfig = None) -> Trajectory:
    """
    Integrate the system from initial data to t_end or truncation.

    Args:
        initial: finite physical state
        params: model parameters on the same grid
        config: StepperConfig

    Returns:
        Trajectory (truncated=True with a reason when the run stopped early)
    """
    config = config or StepperConfig()
    grid = initial.grid
    if params.grid != grid:
        raise ValueError("initial data and bathymetry live on different grids")
    beta, g = params.beta, params.g

    if config.formulation == 'symmetric':
        system = _SymmetricSystem(params)
        y = [np.array(initial.u.samples), np.array(symmetrize(initial, params, config.delta).v.samples)]
    else:
        system = _PhysicalSystem(params)
        y = [np.array(initial.u.samples), np.array(initial.psi.samples)]
    labels = np.array(grid.x) if config.track_characteristics else None
    if labels is not None:
        y.append(labels.copy())

    filt = _filter_table(grid, config.filter_strength, config.filter_order)
    tail0 = _tail(initial.u.samples, initial.psi.samples, grid)
    if tail0 > 1e-10:
        logger.warning(f"Initial data not resolved to 1e-10 on N={grid.n_points} (tail ratio {tail0:.2e})")
    guard = max(config.resolution_tol, min(config.resolution_growth * tail0, GUARD_CEILING))
    if tail0 >= guard:
        logger.warning(f"Initial tail ratio {tail0:.2e} already exceeds the guard {guard:.2e}")

    targets = _targets(config, beta)
    s_end = targets[-1]
    records = [_record(initial.u.samples, initial.psi.samples, grid, 0.0, beta)]
    snapshots = [Snapshot(0.0, 0.0, initial)]

    logger.info(
        f"Simulating N={grid.n_points}, L={grid.half_width:g}, beta={beta:g}, g={g:g} "
        f"to t={config.t_end:g} (s={s_end:.6g}, {config.formulation} form)"
    )

    s = 0.0
    step = 0
    reason = 't_end'
    target_idx = 0
    while s < s_end * (1.0 - _LANDING_TOL):
        if step >= config.max_steps:
            reason = 'max-steps'
            break
        u, psi = system.to_physical(y)
        ds = _stable_step(u, psi, system.theta, g, grid, config.cfl, config.ds)
        target = targets[target_idx]
        landing = s + ds >= target * (1.0 - _LANDING_TOL)
        if landing:
            ds = target - s
        try:
            y = _rk4(system, y, ds, filt)
        except BlowupFlag as exc:
            logger.info(f"Step {step + 1} at s={s:.6g}: {exc}")
            reason = 'non-finite'
            break
        step += 1
        s = target if landing else s + ds

        u, psi = system.to_physical(y)
        record = _record(u, psi, grid, s, beta)
        records.append(record)
        if landing or step % config.snapshot_stride == 0:
            snapshots.append(Snapshot(record['t'], s, PhysState.from_arrays(grid, u, psi)))
        if landing:
            target_idx = min(target_idx + 1, len(targets) - 1)

        if -record['min_ux'] > config.gradient_cap:
            reason = 'gradient-cap'
            break
        if _tail(u, psi, grid) > guard:
            reason = 'resolution'
            break

    if snapshots[-1].s != s:
        u, psi = system.to_physical(y)
        snapshots.append(Snapshot(time_inverse_map(s, beta), s, PhysState.from_arrays(grid, u, psi)))

    truncated = reason != 't_end'
    series = pd.DataFrame.from_records(records, columns=SERIES_COLUMNS)
    if truncated:
        logger.info(
            f"Run truncated ({reason}) after {step} steps at t={series['t'].iloc[-1]:.6g}, "
            f"min u_x={series['min_ux'].iloc[-1]:.4g}"
        )
    else:
        logger.info(f"Reached t_end={config.t_end:g} after {step} steps")

    return Trajectory(
        grid=grid,
        params=params,
        snapshots=snapshots,
        series=series,
        truncated=truncated,
        reason=reason,
        labels=labels,
        positions=y[2].copy() if labels is not None else None,
    )
