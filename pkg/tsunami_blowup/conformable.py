"""
Conformable Calculus in Time
============================
Discrete tools for the conformable derivative of order beta in (0, 1]:

    D^beta f(t) = t^(1-beta) f'(t)            (t > 0)
    I^beta f(t) = integral_0^t tau^(beta-1) f(tau) d tau

and the time change s = t^beta / beta under which D^beta becomes d/ds. The
solvers integrate in s only; physical times are recovered with the inverse map.

Also here: the closed-form Riccati comparison times for gradient blow-up and
the lifespan lower bound of the local well-posedness theory.

References:
-----------
Khalil, R., Al Horani, M., Yousef, A., & Sababheh, M. (2014). A new definition
    of fractional derivative. J. Comput. Appl. Math. 264, 65-70.

Abdeljawad, T. (2015). On conformable fractional calculus. J. Comput. Appl.
    Math. 279, 57-66.
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

# Power-law exponent of D^beta f beyond which the t -> 0 limit is 0 or divergent
DIVERGENCE_EXPONENT = 0.2

# Relative mismatch between extrapolated and one-sided f'(0) accepted as a bounded slope
BOUNDED_SLOPE_TOL = 0.1


def frac_order(beta: float) -> float:
    """
    Validate a conformable order.

    Args:
        beta: candidate order

    Returns:
        float: beta

    Raises:
        ValueError: unless 0 < beta <= 1
    """
    beta = float(beta)
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0,1], got {beta}")
    return beta


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """
    Samples of a scalar function of time.

    Times are non-negative and strictly increasing. singular_at_origin marks
    a derivative series whose t = 0 limit diverges (the value there is NaN).
    origin_power p in [0, 1) states that the values behave like t^p times a
    smooth function near t = 0; a conformable derivative of a function with
    bounded slope carries p = 1 - beta.
    """

    times: np.ndarray
    values: np.ndarray
    singular_at_origin: bool = False
    origin_power: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.origin_power < 1.0:
            raise ValueError(f"origin_power must lie in [0,1), got {self.origin_power}")
        times = np.array(self.times, dtype=float)
        values = np.array(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValueError(f"times {times.shape} and values {values.shape} must be matching 1-D arrays")
        if times.size == 0:
            raise ValueError("a time series needs at least one sample")
        if times[0] < 0:
            raise ValueError(f"times must be non-negative, got t0={times[0]}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        times.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.times.size

    def to_frame(self, name: str = 'value') -> pd.DataFrame:
        return pd.DataFrame({'t': self.times, name: self.values})


def time_forward_map(t, beta: float):
    """s = t^beta / beta."""
    beta = frac_order(beta)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("physical time must be non-negative")
    s = t ** beta / beta
    return float(s) if s.ndim == 0 else s


def time_inverse_map(s, beta: float):
    """t = (beta * s)^(1/beta)."""
    beta = frac_order(beta)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("rescaled time must be non-negative")
    t = (beta * s) ** (1.0 / beta)
    return float(t) if t.ndim == 0 else t


def _extrapolate_to_origin(t: np.ndarray, d: np.ndarray) -> float:
    """Quadratic Lagrange extrapolation of three samples to t = 0."""
    w0 = t[1] * t[2] / ((t[0] - t[1]) * (t[0] - t[2]))
    w1 = t[0] * t[2] / ((t[1] - t[0]) * (t[1] - t[2]))
    w2 = t[0] * t[1] / ((t[2] - t[0]) * (t[2] - t[1]))
    return float(w0 * d[0] + w1 * d[1] + w2 * d[2])


def _origin_limit(times: np.ndarray, fprime: np.ndarray, beta: float):
    """
    Limit of t^(1-beta) f'(t) as t -> 0 for beta < 1.

    Returns (limit, kind) with kind 'bounded' (f' bounded, limit 0), 'finite'
    or 'divergent' (limit NaN). A bounded f' shows as one-sided and
    extrapolated slopes at 0 agreeing. Otherwise the growth exponent of |f'|
    is measured on samples a few cells away from the origin, where one-sided
    differences are reliable: D^beta f then behaves like t^(1 - beta - growth).
    """
    picks = [2, 4, 8] if times.size > 8 else [1, 2, 3]
    t = times[picks]
    slopes = fprime[picks]
    m = np.abs(slopes)
    scale = max(float(m.max()), abs(float(fprime[0])))
    if scale == 0.0 or abs(_extrapolate_to_origin(t, slopes) - fprime[0]) <= BOUNDED_SLOPE_TOL * scale:
        return 0.0, 'bounded'
    if not m[0] > m[1] > m[2] > 0:
        return 0.0, 'bounded'

    growth = min(math.log(m[0] / m[1]) / math.log(t[1] / t[0]), math.log(m[1] / m[2]) / math.log(t[2] / t[1]))
    exponent = (1.0 - beta) - growth
    if exponent < -DIVERGENCE_EXPONENT:
        return math.nan, 'divergent'
    if exponent > DIVERGENCE_EXPONENT:
        return 0.0, 'finite'
    return _extrapolate_to_origin(t, t ** (1.0 - beta) * slopes), 'finite'


def conformable_derivative(series: TimeSeries, beta: float) -> TimeSeries:
    """
    Conformable derivative t^(1-beta) f'(t) with second-order finite differences.

    At t = 0 with beta < 1 the value is the t -> 0 limit: 0 when f' stays
    bounded (the result then carries origin_power = 1 - beta), else the
    limit extrapolated from the positive samples. When that limit diverges
    the sample is NaN and the result is flagged singular_at_origin.

    Args:
        series: samples of f, at least 4 of them
        beta: order in (0, 1]

    Returns:
        TimeSeries: D^beta f on the same times
    """
    beta = frac_order(beta)
    times, f = series.times, series.values
    if times.size < 4:
        raise ValueError(f"need at least 4 samples for the conformable derivative, got {times.size}")

    fprime = np.gradient(f, times, edge_order=2)
    values = times ** (1.0 - beta) * fprime
    singular = False
    power = 0.0
    if times[0] == 0.0 and beta < 1.0:
        limit, kind = _origin_limit(times, fprime, beta)
        values[0] = limit
        singular = kind == 'divergent'
        if singular:
            logger.warning("Conformable derivative diverges as t -> 0; t=0 sample set to NaN")
        elif kind == 'bounded':
            power = 1.0 - beta
    return TimeSeries(times, values, singular_at_origin=singular, origin_power=power)


def fractional_integral(series: TimeSeries, beta: float) -> TimeSeries:
    """
    Conformable integral I^beta f(t) = int_0^t tau^(beta-1) f(tau) d tau.

    With p = series.origin_power, f = t^p h and the smooth factor h is taken
    piecewise linear between samples; each cell is integrated exactly against
    tau^(beta-1+p), so the weak singularity at 0 is harmless. For a
    conformable derivative of order beta the weight collapses to 1 and
    I^beta(D^beta f) = f - f(0) holds to second order.

    Args:
        series: samples of f starting at t = 0
        beta: order in (0, 1]

    Returns:
        TimeSeries: cumulative integral, 0 at t = 0
    """
    beta = frac_order(beta)
    times, f = series.times, series.values
    if times[0] != 0.0:
        raise ValueError(f"fractional integral needs samples from t=0, got t0={times[0]}")
    if times.size == 1:
        return TimeSeries(times, np.zeros(1))

    power = beta + series.origin_power
    h = np.array(f)
    if series.origin_power > 0:
        h[1:] = f[1:] / times[1:] ** series.origin_power
        h[0] = _extrapolate_to_origin(times[1:4], h[1:4]) if times.size >= 4 else h[1]

    a, b = times[:-1], times[1:]
    m0 = (b ** power - a ** power) / power
    m1 = (b ** (power + 1) - a ** (power + 1)) / (power + 1)
    slope = np.diff(h) / (b - a)
    cells = h[:-1] * m0 + slope * (m1 - a * m0)
    return TimeSeries(times, np.concatenate([[0.0], np.cumsum(cells)]))


class RiccatiBounds(NamedTuple):
    """Comparison blow-up times for the gradient Riccati inequality."""

    t_paper: float
    t_sharp: float


def riccati_blowup_bounds(u0x_at_x0: float, beta: float) -> RiccatiBounds:
    """
    Blow-up times of D^beta w <= -w^2 from w(0) = u0x_at_x0 < 0.

    t_paper = (-1/u0x)^(1/beta) compares with w0/(1 + w0 t^beta);
    t_sharp = (-beta/u0x)^(1/beta) is where the exact conformable Riccati
    solution w0/(1 + w0 t^beta/beta) leaves every bound. t_sharp <= t_paper,
    with equality only at beta = 1.
    """
    beta = frac_order(beta)
    if not u0x_at_x0 < 0:
        raise ValueError(f"gradient blow-up needs u0x(x0) < 0, got {u0x_at_x0}")
    magnitude = abs(u0x_at_x0)
    return RiccatiBounds(
        t_paper=(1.0 / magnitude) ** (1.0 / beta),
        t_sharp=(beta / magnitude) ** (1.0 / beta),
    )


def riccati_profile(u0x_at_x0: float, beta: float, t, sharp: bool = True):
    """
    Comparison curve for the minimum gradient.

    sharp=True:  w0 / (1 + w0 t^beta / beta), the exact conformable Riccati solution
    sharp=False: w0 / (1 + w0 t^beta)
    Values past the singularity are NaN.
    """
    beta = frac_order(beta)
    t = np.asarray(t, dtype=float)
    clock = t ** beta / beta if sharp else t ** beta
    denom = 1.0 + u0x_at_x0 * clock
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(denom > 0, u0x_at_x0 / safe, np.nan)


def lifespan_estimate(norm_U0: float, norm_theta: float, beta: float, C0: float = 1.0) -> float:
    """
    Guaranteed existence time of the smooth solution:

        T = min{ beta^(1/beta), [beta ln2 / (2 C0 (||U0|| + C0 ||theta||))]^(1/beta) }

    with Besov B^(3/2)_{2,1} norms. At beta = 1 this is min{1, ln2 / (2 C0 (...))}.
    Zero data give the cap beta^(1/beta).
    """
    beta = frac_order(beta)
    if norm_U0 < 0 or norm_theta < 0:
        raise ValueError("norms must be non-negative")
    if C0 <= 0:
        raise ValueError(f"C0 must be positive, got {C0}")
    cap = beta ** (1.0 / beta)
    size = norm_U0 + C0 * norm_theta
    if size == 0:
        return cap
    return min(cap, (beta * math.log(2.0) / (2.0 * C0 * size)) ** (1.0 / beta))


def lifespan_scaling(norm_U0: float, norm_theta: float, beta: float) -> float:
    """Order-of-magnitude lifespan [beta / (||U0|| + ||theta||)]^(1/beta), without constants."""
    beta = frac_order(beta)
    size = norm_U0 + norm_theta
    if size <= 0:
        return math.inf
    return (beta / size) ** (1.0 / beta)


def optimal_lifespan_order(norm_U0: float, norm_theta: float, betas: Optional[Sequence[float]] = None):
    """
    Order beta in (0, 1] that maximizes lifespan_scaling for fixed data.

    With K = ||U0|| + ||theta|| the scaling (beta/K)^(1/beta) increases while
    beta < e K, so the maximum sits at beta = min(1, e K): small data reach
    their longest guaranteed lifespan at a fractional order.

    Returns:
        (beta, lifespan) at the best order of the scanned grid
    """
    if betas is None:
        betas = np.linspace(0.01, 1.0, 100)
    betas = np.asarray(betas, dtype=float)
    spans = np.array([lifespan_scaling(norm_U0, norm_theta, b) for b in betas])
    best = int(np.argmax(spans))
    return float(betas[best]), float(spans[best])
