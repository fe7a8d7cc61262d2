"""
Picard Iteration on Linearized Transport Systems
================================================
Constructive solver for the symmetric form U = (u, v):

    U^0 = 0
    d_s U^{n+1} + A(U^n) d_x U^{n+1} = M,   U^{n+1}(0) = S_{n+1} U_0

with M = (g theta_x, 0) and S_j the low-frequency truncation. Each iterate is
a linear symmetric hyperbolic solve whose frozen coefficients are the stored
snapshots of the previous iterate, interpolated linearly in s.

Reported per iteration:
- the sup-in-time Besov norm ||U^n||_{L^inf_T(B^{3/2}_{2,1})},
- the Cauchy increment V_{n+1} = ||U^{n+1} - U^n||_{L^inf_T(L^2)},
- the initial-data tail ||Delta_n U_0||_{L^2}.

The horizon T is rescaled time; physical time follows from time_inverse_map.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

import numpy as np
import pandas as pd

from tsunami_blowup.conformable import lifespan_estimate, time_inverse_map
from tsunami_blowup.grid_spectral import (
    Field,
    PeriodicGrid,
    besov_norm,
    block_norms,
    dealiased_product,
    derivative_samples,
    exponential_filter,
    low_freq_truncate,
)
from tsunami_blowup.model import DELTA_FLOOR, AdmissibilityError, ModelParams, SymState
from tsunami_blowup.solver_direct import StepperConfig

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['iteration', 'besov_sup', 'cauchy_increment', 'tail_l2']


class TransportSolveError(RuntimeError):
    """Raised when a linear transport solve produces non-finite values."""


@dataclass(frozen=True)
class PicardConfig:
    """
    Settings of the iterative solver.

    Args:
        n_max: maximum number of iterations
        tol_l2: stop once V_{n+1} < tol_l2
        T: horizon in rescaled time s
        stepper: inner StepperConfig (ds, snapshot_stride, filter)
        C0: constant of the uniform bound and the lifespan gate
        delta: admissibility floor for psi + theta
    """

    n_max: int = 20
    tol_l2: float = 1e-10
    T: float = 0.1
    stepper: StepperConfig = field(default_factory=lambda: StepperConfig(ds=1e-2, snapshot_stride=1))
    C0: float = 1.0
    delta: float = DELTA_FLOOR

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if not self.tol_l2 > 0:
            raise ValueError(f"tol_l2 must be positive, got {self.tol_l2}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.C0 > 0:
            raise ValueError(f"C0 must be positive, got {self.C0}")

    def time_grid(self) -> Tuple[np.ndarray, int]:
        """Step times in s and the number of steps (uniform, ds <= stepper.ds)."""
        n_steps = max(1, math.ceil(self.T / self.stepper.ds - 1e-9))
        return np.linspace(0.0, self.T, n_steps + 1), n_steps

    def stored_times(self) -> np.ndarray:
        """Times at which linear_transport_solve keeps a snapshot."""
        times, n_steps = self.time_grid()
        keep = [i for i in range(n_steps + 1) if i % self.stepper.snapshot_stride == 0 or i == n_steps]
        return times[keep]


@dataclass(frozen=True, eq=False)
class SymTrajectory:
    """Symmetric-form fields stored at increasing rescaled times."""

    grid: PeriodicGrid
    s: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        shape = (self.s.size, self.grid.n_points)
        if self.u.shape != shape or self.v.shape != shape:
            raise ValueError(f"fields must have shape {shape}")
        if np.any(np.diff(self.s) <= 0):
            raise ValueError("snapshot times must be strictly increasing")

    @classmethod
    def zeros(cls, grid: PeriodicGrid, s: np.ndarray) -> 'SymTrajectory':
        shape = (s.size, grid.n_points)
        return cls(grid, np.asarray(s, dtype=float), np.zeros(shape), np.zeros(shape))

    def __len__(self):
        return self.s.size

    def state(self, i: int) -> SymState:
        return SymState.from_arrays(self.grid, self.u[i], self.v[i])

    def covers(self, T: float) -> bool:
        return self.s[0] <= 0.0 and self.s[-1] >= T * (1.0 - 1e-12)

    def interpolate(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        """Fields at time s, linear between stored snapshots."""
        if s <= self.s[0]:
            return self.u[0], self.v[0]
        if s >= self.s[-1]:
            return self.u[-1], self.v[-1]
        i = int(np.searchsorted(self.s, s, side='right')) - 1
        w = (s - self.s[i]) / (self.s[i + 1] - self.s[i])
        if w == 0.0:
            return self.u[i], self.v[i]
        return (1 - w) * self.u[i] + w * self.u[i + 1], (1 - w) * self.v[i] + w * self.v[i + 1]

    def sup_l2_distance(self, other: 'SymTrajectory') -> float:
        """sup_s ||(u, v) - (u', v')||_{L^2} over common snapshot times."""
        if self.s.shape != other.s.shape or not np.allclose(self.s, other.s, rtol=0, atol=1e-14):
            raise ValueError("trajectories are stored at different times")
        sq = np.sum((self.u - other.u) ** 2 + (self.v - other.v) ** 2, axis=1) * self.grid.dx
        return float(np.sqrt(sq.max()))

    def sup_besov(self, s_index: float = 1.5) -> float:
        """sup over stored times of ||u||_B + ||v||_B in B^{s}_{2,1}."""
        return max(
            besov_norm(Field(self.grid, self.u[i]), s_index, 1) + besov_norm(Field(self.grid, self.v[i]), s_index, 1)
            for i in range(len(self))
        )


@dataclass(eq=False)
class IterationReport:
    """
    Diagnostics of one Picard run.

    table has one row per iterate with columns REPORT_COLUMNS; verdict is
    'converged', 'not converged' or 'aborted'.
    """

    table: pd.DataFrame
    converged: bool
    verdict: str
    residual: float = math.nan
    residual_tol: float = math.nan
    T: float = math.nan
    beta: float = 1.0

    @property
    def increments(self) -> np.ndarray:
        return self.table['cauchy_increment'].to_numpy()

    @property
    def ratios(self) -> np.ndarray:
        """V_{n+1} / V_n for consecutive iterations."""
        v = self.increments
        with np.errstate(divide='ignore', invalid='ignore'):
            return v[1:] / v[:-1]

    @property
    def cauchy_sum(self) -> float:
        return float(np.sum(self.increments))

    @property
    def physical_horizon(self) -> float:
        return time_inverse_map(self.T, self.beta)


def _transport_tendency(u, v, cu, cv, forcing_u, forcing_v, g, grid):
    ux = derivative_samples(u, grid)
    vx = derivative_samples(v, grid)
    du = forcing_u - dealiased_product(cu, ux, grid) - 0.5 * g * dealiased_product(cv, vx, grid)
    dv = forcing_v - 0.5 * dealiased_product(cv, ux, grid) - dealiased_product(cu, vx, grid)
    return du, dv


def linear_transport_solve(
    coeff: SymTrajectory,
    forcing: Tuple[Field, Field],
    init: SymState,
    config: PicardConfig,
    g: float = 1.0,
) -> SymTrajectory:
    """
    Solve d_s U + A(W) d_x U = M on [0, T] for frozen coefficients W.

    Args:
        coeff: coefficient trajectory W covering [0, T]
        forcing: (M_u, M_v)
        init: U(0)
        config: PicardConfig (T and inner stepper)
        g: gravity entering A(W)

    Returns:
        SymTrajectory of U stored every stepper.snapshot_stride steps (and at T)

    Raises:
        ValueError: coefficient trajectory does not cover [0, T] or grids differ
        TransportSolveError: non-finite values
    """
    grid = init.grid
    if coeff.grid != grid or forcing[0].grid != grid or forcing[1].grid != grid:
        raise ValueError("coefficients, forcing and initial data must share one grid")
    if not coeff.covers(config.T):
        raise ValueError(f"coefficient trajectory covers [{coeff.s[0]}, {coeff.s[-1]}], need [0, {config.T}]")

    times, n_steps = config.time_grid()
    stride = config.stepper.snapshot_stride
    strength = config.stepper.filter_strength
    filt = exponential_filter(grid, float(strength), int(config.stepper.filter_order)) if strength > 0 else None
    fu, fv = forcing[0].samples, forcing[1].samples

    def rhs(s, u, v):
        cu, cv = coeff.interpolate(s)
        return _transport_tendency(u, v, cu, cv, fu, fv, g, grid)

    u = np.array(init.u.samples)
    v = np.array(init.v.samples)
    kept_s, kept_u, kept_v = [0.0], [u.copy()], [v.copy()]
    for step in range(n_steps):
        s0, ds = times[step], times[step + 1] - times[step]
        k1 = rhs(s0, u, v)
        k2 = rhs(s0 + 0.5 * ds, u + 0.5 * ds * k1[0], v + 0.5 * ds * k1[1])
        k3 = rhs(s0 + 0.5 * ds, u + 0.5 * ds * k2[0], v + 0.5 * ds * k2[1])
        k4 = rhs(s0 + ds, u + ds * k3[0], v + ds * k3[1])
        u = u + ds / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        v = v + ds / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if filt is not None:
            u = np.fft.irfft(np.fft.rfft(u) * filt, n=grid.n_points)
            v = np.fft.irfft(np.fft.rfft(v) * filt, n=grid.n_points)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise TransportSolveError(f"non-finite values at s={times[step + 1]:.6g} (step {step + 1})")
        if (step + 1) % stride == 0 or step + 1 == n_steps:
            kept_s.append(times[step + 1])
            kept_u.append(u.copy())
            kept_v.append(v.copy())

    return SymTrajectory(grid, np.array(kept_s), np.array(kept_u), np.array(kept_v))


def _pde_residual(trajectory: SymTrajectory, forcing_u, forcing_v, g) -> float:
    """max over interior snapshots of ||d_s U + A(U) d_x U - M||_{L^2} (centred differences in s)."""
    if len(trajectory) < 3:
        return math.nan
    grid = trajectory.grid
    worst = 0.0
    for i in range(1, len(trajectory) - 1):
        h = trajectory.s[i + 1] - trajectory.s[i - 1]
        du_ds = (trajectory.u[i + 1] - trajectory.u[i - 1]) / h
        dv_ds = (trajectory.v[i + 1] - trajectory.v[i - 1]) / h
        u, v = trajectory.u[i], trajectory.v[i]
        tu, tv = _transport_tendency(u, v, u, v, forcing_u, forcing_v, g, grid)
        err = np.sum((du_ds - tu) ** 2 + (dv_ds - tv) ** 2) * grid.dx
        worst = max(worst, float(np.sqrt(err)))
    return worst


def _tail_norm(u0: Field, v0: Field, n: int) -> float:
    """||Delta_n U_0||_{L^2}, zero above the top resolved block."""
    bu, bv = block_norms(u0), block_norms(v0)
    if n + 1 >= bu.size:
        return 0.0
    return float(math.hypot(bu[n + 1], bv[n + 1]))


def picard_solve(initial: SymState, params: ModelParams, config: PicardConfig = None):
    """
    Iterate the linearized transport solves until the Cauchy increment
    drops below tol_l2 or n_max iterates have been built.

    Args:
        initial: U_0 = (u_0, v_0), with v_0^2/4 >= delta
        params: model parameters (theta, beta, g)
        config: PicardConfig

    Returns:
        (SymTrajectory of the last iterate, IterationReport)

    Raises:
        AdmissibilityError: if v_0^2/4 < delta somewhere
    """
    config = config or PicardConfig()
    grid = initial.grid
    depth = 0.25 * initial.v.samples ** 2
    i_low = int(np.argmin(depth))
    if np.any(initial.v.samples < 0) or depth[i_low] < config.delta:
        raise AdmissibilityError(
            f"psi + theta = {depth[i_low]:.3e} at x = {grid.x[i_low]:.6f} is below the floor {config.delta:g}",
            x=float(grid.x[i_low]),
            value=float(depth[i_low]),
        )

    norm_U0 = besov_norm(initial.u, 1.5, 1) + besov_norm(initial.v, 1.5, 1)
    norm_theta = besov_norm(params.theta, 1.5, 1)
    gate = lifespan_estimate(norm_U0, norm_theta, params.beta, config.C0)
    horizon = time_inverse_map(config.T, params.beta)
    if horizon > gate:
        logger.warning(
            f"Horizon t={horizon:.4g} exceeds the lifespan gate {gate:.4g} (C0={config.C0:g}); "
            "contraction is not guaranteed"
        )

    forcing = (Field(grid, params.g * params.theta_x()), Field.zeros(grid))
    previous = SymTrajectory.zeros(grid, config.stored_times())

    rows = []
    verdict = 'not converged'
    for n in range(config.n_max):
        init = SymState(low_freq_truncate(initial.u, n + 1), low_freq_truncate(initial.v, n + 1))
        try:
            current = linear_transport_solve(previous, forcing, init, config, params.g)
        except TransportSolveError as exc:
            logger.error(f"Picard iterate {n + 1} aborted: {exc}")
            verdict = 'aborted'
            break
        increment = current.sup_l2_distance(previous)
        rows.append({
            'iteration': n + 1,
            'besov_sup': current.sup_besov(1.5),
            'cauchy_increment': increment,
            'tail_l2': _tail_norm(initial.u, initial.v, n),
        })
        logger.debug(f"Picard iterate {n + 1}: V={increment:.3e}")
        previous = current
        if increment < config.tol_l2:
            verdict = 'converged'
            break

    table = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    residual = _pde_residual(previous, forcing[0].samples, forcing[1].samples, params.g)
    spacing = float(np.max(np.diff(previous.s)))
    residual_tol = 10.0 * config.tol_l2 / config.T + 10.0 * spacing ** 2
    report = IterationReport(
        table=table,
        converged=verdict == 'converged',
        verdict=verdict,
        residual=residual,
        residual_tol=residual_tol,
        T=config.T,
        beta=params.beta,
    )
    if report.converged:
        logger.info(f"Picard converged after {len(table)} iterates (residual {residual:.2e})")
    else:
        logger.warning(f"Picard {verdict} after {len(table)} iterates")
    return previous, report


class BoundCheck(NamedTuple):
    holds: bool
    margin: float


def uniform_bound_check(report: IterationReport, norm_U0: float, norm_theta: float, C0: float = 1.0) -> BoundCheck:
    """
    Compare every iterate's sup-in-time Besov norm with 2 (||U_0|| + C0 ||theta||).

    Returns:
        BoundCheck(holds, margin) with margin = cap - worst iterate (>= 0 when it holds)
    """
    cap = 2.0 * (norm_U0 + C0 * norm_theta)
    worst = float(report.table['besov_sup'].max()) if len(report.table) else 0.0
    margin = cap - worst
    return BoundCheck(holds=bool(margin >= -1e-12 * max(1.0, cap)), margin=margin)
