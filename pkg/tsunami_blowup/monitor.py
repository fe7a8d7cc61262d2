"""
Blow-up Monitor
===============
Post-processing of direct-solver trajectories:

- criterion_integral: I(t) = int_0^t max(||u_x||_inf, ||psi_x||_inf) d tau,
  which must diverge at a finite blow-up time.
- detect_blowup: extrapolated blow-up time and location from a refinement
  family of truncated runs.
- reconcile_bounds: compares the estimate with the Riccati comparison times
  and the lifespan gate.
- riccati_comparison: the recorded min u_x beside the comparison curves.

Blow-up time estimate:
    In rescaled time the gradient at the collapsing characteristic follows the
    Riccati profile min u_x ~ -1/(a (s_c - s)), so -1/min u_x is linear in s near
    truncation. A least-squares line through the last decade of gradient growth
    gives s_c, mapped back to physical time with time_inverse_map. The spread of
    the per-resolution estimates is the reported uncertainty.

Blow-up location:
    x_star is the Lagrangian label of the collapsing characteristic (minimum of
    the compression dX/dxi of the tracked labels); x_star_eulerian is the
    position of min u_x at the last record. The two coincide for blow-up at a
    symmetry point.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid
from scipy.stats import linregress

from tsunami_blowup.conformable import (
    TimeSeries,
    lifespan_estimate,
    riccati_blowup_bounds,
    riccati_profile,
    time_inverse_map,
)
from tsunami_blowup.grid_spectral import besov_norm, derivative_samples
from tsunami_blowup.model import AdmissibilityError, symmetrize
from tsunami_blowup.solver_direct import Trajectory, refined_minimum

logger = logging.getLogger(__name__)

# Relative spread of per-resolution estimates accepted as agreement
AGREEMENT_TOL = 0.05

# Fit window: records whose |min u_x| is within this factor of the final value
FIT_DECADE = 10.0

MIN_FIT_POINTS = 5

BLOWUP_REASONS = ('gradient-cap', 'resolution', 'non-finite')

PER_RESOLUTION_COLUMNS = [
    'n_points', 'reason', 't_final', 'min_ux_final', 's_star', 't_star', 't_star_stderr',
    'x_star', 'x_star_eulerian', 'criterion_final', 'fit_points',
]


class RiccatiFit(NamedTuple):
    s_star: float
    t_star: float
    t_star_stderr: float
    n_points: int


@dataclass(eq=False)
class BlowupReport:
    """
    Outcome of detect_blowup.

    When nothing was detected the estimate fields are NaN. per_resolution
    holds one row per trajectory with the columns PER_RESOLUTION_COLUMNS.
    """

    detected: bool
    t_star_estimate: float
    t_star_uncertainty: float
    s_star_estimate: float
    x_star: float
    x_star_eulerian: float
    criterion_integral_series: Optional[TimeSeries]
    t_paper: float = math.nan
    t_sharp: float = math.nan
    lifespan_gate: float = math.nan
    beta: float = 1.0
    per_resolution: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=PER_RESOLUTION_COLUMNS))

    def summary(self) -> dict:
        return {
            'detected': self.detected,
            't_star_estimate': self.t_star_estimate,
            't_star_uncertainty': self.t_star_uncertainty,
            's_star_estimate': self.s_star_estimate,
            'x_star': self.x_star,
            'x_star_eulerian': self.x_star_eulerian,
            't_paper': self.t_paper,
            't_sharp': self.t_sharp,
            'lifespan_gate': self.lifespan_gate,
        }


def criterion_integral(trajectory: Trajectory) -> TimeSeries:
    """
    Cumulative trapezoid of max(||u_x||_inf, ||psi_x||_inf) over physical time.

    The records are stored in s; their physical times come from the same
    (t, s) pairs, so the integral is taken directly against t.

    Raises:
        ValueError: for a trajectory without records
    """
    series = trajectory.series
    if series.empty:
        raise ValueError("trajectory has no records")
    t = series['t'].to_numpy()
    rate = np.maximum(series['linf_ux'].to_numpy(), series['linf_psix'].to_numpy())
    if t.size == 1:
        return TimeSeries(t, np.zeros(1))
    return TimeSeries(t, cumulative_trapezoid(rate, t, initial=0.0))


def fit_riccati_profile(trajectory: Trajectory, decade: float = FIT_DECADE) -> RiccatiFit:
    """
    Fit -1/min u_x = a (s_c - s) on the last decade of gradient growth.

    Falls back to every record with min u_x < 0 when the decade holds fewer
    than MIN_FIT_POINTS records. Returns NaN fields when no finite root exists.
    """
    series = trajectory.series
    s = series['s'].to_numpy()
    w = series['min_ux'].to_numpy()
    negative = w < 0
    nan_fit = RiccatiFit(math.nan, math.nan, math.nan, 0)
    if np.count_nonzero(negative) < 3:
        return nan_fit

    final = abs(w[-1])
    window = negative & (np.abs(w) >= final / decade)
    if np.count_nonzero(window) < MIN_FIT_POINTS:
        window = negative
    y = -1.0 / w[window]
    fit = linregress(s[window], y)
    if not fit.slope < 0:
        return nan_fit

    s_star = -fit.intercept / fit.slope
    stderr_s = math.hypot(fit.intercept_stderr / fit.slope, fit.intercept * fit.stderr / fit.slope ** 2)
    if not (np.isfinite(s_star) and s_star > 0):
        return nan_fit
    beta = trajectory.beta
    t_star = time_inverse_map(s_star, beta)
    # dt/ds = (beta s)^(1/beta - 1)
    stderr_t = stderr_s * (beta * s_star) ** (1.0 / beta - 1.0)
    return RiccatiFit(float(s_star), float(t_star), float(stderr_t), int(np.count_nonzero(window)))


def blowup_location(trajectory: Trajectory, mirror_rtol: float = 1e-6) -> float:
    """
    Label of the most compressed characteristic, or the Eulerian minimizer
    without tracking. When the mirrored label is compressed just as much
    (symmetric data collapse at +/- x simultaneously) the non-negative one is
    reported.
    """
    compression = trajectory.compression()
    if compression is None:
        return float(trajectory.series['argmin_x'].iloc[-1])
    grid = trajectory.grid
    _, label = refined_minimum(compression, grid)
    i = int(np.argmin(compression))
    mirrored = compression[grid.reflection_index[i]]
    if label < 0 and mirrored - compression[i] <= mirror_rtol * abs(compression[i]):
        label = -label
    return label


def _initial_gradient(trajectory: Trajectory, x0: float) -> float:
    grid = trajectory.grid
    ux0 = derivative_samples(trajectory.snapshots[0].state.u.samples, grid)
    return float(ux0[grid.nearest_index(x0)])


def riccati_comparison(trajectory: Trajectory, x0: float = 0.0) -> pd.DataFrame:
    """
    Recorded min u_x next to the Riccati comparison curves started from u0'(x0).

    Columns t, min_ux, sharp (w0 / (1 + w0 t^beta / beta)) and loose
    (w0 / (1 + w0 t^beta)). The curves are NaN past their singularities, and
    throughout when u0'(x0) >= 0.
    """
    t = trajectory.series['t'].to_numpy()
    u0x_at_x0 = _initial_gradient(trajectory, x0)
    if u0x_at_x0 < 0:
        sharp = riccati_profile(u0x_at_x0, trajectory.beta, t, sharp=True)
        loose = riccati_profile(u0x_at_x0, trajectory.beta, t, sharp=False)
    else:
        sharp = loose = np.full(t.size, np.nan)
    min_ux = trajectory.series['min_ux'].to_numpy()
    return pd.DataFrame({'t': t, 'min_ux': min_ux, 'sharp': sharp, 'loose': loose})


def _initial_bounds(trajectory: Trajectory, x0: float, C0: float):
    initial = trajectory.snapshots[0].state
    params = trajectory.params
    u0x_at_x0 = _initial_gradient(trajectory, x0)
    if u0x_at_x0 < 0:
        bounds = riccati_blowup_bounds(u0x_at_x0, params.beta)
        t_paper, t_sharp = bounds.t_paper, bounds.t_sharp
    else:
        t_paper = t_sharp = math.nan
    try:
        sym = symmetrize(initial, params)
        norm_U0 = besov_norm(sym.u, 1.5, 1) + besov_norm(sym.v, 1.5, 1)
        gate = lifespan_estimate(norm_U0, besov_norm(params.theta, 1.5, 1), params.beta, C0)
    except AdmissibilityError:
        gate = math.nan
    return t_paper, t_sharp, gate


def detect_blowup(
    trajectories: Sequence[Trajectory],
    x0: float = 0.0,
    C0: float = 1.0,
    agreement: float = AGREEMENT_TOL,
) -> BlowupReport:
    """
    Estimate blow-up time and location from a refinement family.

    Args:
        trajectories: runs of one physical setup at distinct N
        x0: point at which the Riccati comparison times are evaluated
        C0: constant of the lifespan gate
        agreement: accepted relative spread (max - min) / median of t_star

    Returns:
        BlowupReport; detected is True iff every run was truncated by a
        blow-up reason, every fit succeeded and the estimates agree.
    """
    if not trajectories:
        raise ValueError("detect_blowup needs at least one trajectory")
    runs = sorted(trajectories, key=lambda tr: tr.grid.n_points)
    if len({tr.grid.n_points for tr in runs}) != len(runs):
        raise ValueError("trajectories must use distinct resolutions")
    if len(runs) < 2:
        logger.warning("Single resolution given; agreement across refinements cannot be checked")

    rows = []
    fits = []
    for tr in runs:
        fit = fit_riccati_profile(tr)
        fits.append(fit)
        criterion = criterion_integral(tr)
        rows.append({
            'n_points': tr.grid.n_points,
            'reason': tr.reason,
            't_final': float(tr.series['t'].iloc[-1]),
            'min_ux_final': float(tr.series['min_ux'].iloc[-1]),
            's_star': fit.s_star,
            't_star': fit.t_star,
            't_star_stderr': fit.t_star_stderr,
            'x_star': blowup_location(tr),
            'x_star_eulerian': float(tr.series['argmin_x'].iloc[-1]),
            'criterion_final': float(criterion.values[-1]),
            'fit_points': fit.n_points,
        })
    table = pd.DataFrame(rows, columns=PER_RESOLUTION_COLUMNS)

    finest = runs[-1]
    t_paper, t_sharp, gate = _initial_bounds(finest, x0, C0)
    estimates = table['t_star'].to_numpy()
    blown = all(tr.truncated and tr.reason in BLOWUP_REASONS for tr in runs)
    fitted = bool(np.all(np.isfinite(estimates)))

    detected = False
    t_star = s_star = uncertainty = math.nan
    if blown and fitted:
        t_star = float(estimates[-1])
        s_star = float(table['s_star'].iloc[-1])
        spread = float(estimates.max() - estimates.min())
        uncertainty = max(spread, float(table['t_star_stderr'].iloc[-1]))
        detected = spread <= agreement * float(np.median(estimates))

    if detected:
        x_star = float(table['x_star'].iloc[-1])
        x_star_eulerian = float(table['x_star_eulerian'].iloc[-1])
        logger.info(f"Blow-up detected: t*={t_star:.6g} +/- {uncertainty:.2g}, x*={x_star:.4f}")
    else:
        x_star = x_star_eulerian = math.nan
        logger.info(
            "No blow-up detected "
            f"(truncated={[tr.reason for tr in runs]}, t_star estimates={np.round(estimates, 6).tolist()})"
        )

    return BlowupReport(
        detected=detected,
        t_star_estimate=t_star,
        t_star_uncertainty=uncertainty,
        s_star_estimate=s_star,
        x_star=x_star,
        x_star_eulerian=x_star_eulerian,
        criterion_integral_series=criterion_integral(finest),
        t_paper=t_paper,
        t_sharp=t_sharp,
        lifespan_gate=gate,
        beta=finest.beta,
        per_resolution=table,
    )


@dataclass(frozen=True)
class BoundVerdicts:
    """
    Estimate vs theory. below_paper failing is a theory-violation alarm;
    sharp_relation is 'below', 'above' or 'equal' (within the uncertainty).
    """

    t_star: float
    uncertainty: float
    t_paper: float
    t_sharp: float
    lifespan_gate: float
    below_paper: bool
    sharp_relation: str
    sharp_gap: float
    above_gate: bool

    @property
    def alarm(self) -> bool:
        return not self.below_paper

    def as_rows(self) -> List[dict]:
        return [
            {'quantity': 'below_paper', 'value': self.below_paper},
            {'quantity': 'sharp_relation', 'value': self.sharp_relation},
            {'quantity': 'sharp_gap', 'value': self.sharp_gap},
            {'quantity': 'above_gate', 'value': self.above_gate},
        ]


def reconcile_bounds(
    report: BlowupReport,
    u0x_at_x0: float,
    beta: float,
    norm_U0: float,
    norm_theta: float,
    C0: float = 1.0,
) -> BoundVerdicts:
    """
    Check t_star against the Riccati comparison times and the lifespan gate.

    Args:
        report: BlowupReport with detected=True
        u0x_at_x0: initial gradient at the symmetry point (< 0)
        beta: order
        norm_U0: ||(u0, v0)||_{B^{3/2}_{2,1}}
        norm_theta: ||theta||_{B^{3/2}_{2,1}}
        C0: constant of the lifespan gate

    Returns:
        BoundVerdicts; an estimate above t_paper beyond its uncertainty is
        logged as an error and reported through below_paper=False.
    """
    if not report.detected:
        raise ValueError("reconcile_bounds needs a report with detected=True")
    bounds = riccati_blowup_bounds(u0x_at_x0, beta)
    gate = lifespan_estimate(norm_U0, norm_theta, beta, C0)
    t_star = report.t_star_estimate
    slack = report.t_star_uncertainty if np.isfinite(report.t_star_uncertainty) else 0.0

    below_paper = t_star <= bounds.t_paper + slack
    if not below_paper:
        logger.error(
            f"Theory violation: t*={t_star:.6g} exceeds T_paper={bounds.t_paper:.6g} "
            f"beyond the uncertainty {slack:.2g}"
        )
    gap = t_star - bounds.t_sharp
    if abs(gap) <= slack:
        relation = 'equal'
    else:
        relation = 'above' if gap > 0 else 'below'
    above_gate = t_star >= gate
    if not above_gate:
        logger.warning(f"t*={t_star:.6g} lies below the lifespan gate {gate:.6g} (C0={C0:g})")

    return BoundVerdicts(
        t_star=t_star,
        uncertainty=slack,
        t_paper=bounds.t_paper,
        t_sharp=bounds.t_sharp,
        lifespan_gate=gate,
        below_paper=bool(below_paper),
        sharp_relation=relation,
        sharp_gap=float(gap),
        above_gate=bool(above_gate),
    )
