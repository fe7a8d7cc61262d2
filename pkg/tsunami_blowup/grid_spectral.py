"""
Periodic Grid, Spectral Operators and Littlewood-Paley Diagnostics
==================================================================
The discrete stage for every field in the package: a uniform periodic grid on
[-L, L), pseudospectral differentiation, the dyadic (Littlewood-Paley)
partition of frequency space and the norms built on it (L2, L-infinity,
Besov B^s_{2,r}, Sobolev H^s).

Dyadic partition:
- chi is a smooth radial bump equal to 1 on |xi| <= 3/4 and 0 on |xi| >= 4/3;
  the transition glues two exp(-1/t) tails, so chi is C-infinity and valued in [0, 1].
- phi(xi) = chi(xi/2) - chi(xi) is supported in the annulus 3/4 <= |xi| <= 8/3.
- Block -1 uses chi, block j >= 0 uses phi(2^-j xi); their sum telescopes to
  chi(2^-(j_max+1) xi), which equals 1 on every grid wavenumber.

All norms are box quadratures on [-L, L); they approximate the whole-line
norms as long as the fields decay towards the box edges.

References:
-----------
Bahouri, H., Chemin, J.-Y., & Danchin, R. (2011). Fourier analysis and nonlinear
    partial differential equations. Springer. (Chapter 2)

Canuto, C., Hussaini, M. Y., Quarteroni, A., & Zang, T. A. (2006). Spectral
    methods: Fundamentals in single domains. Springer.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Radii of the ball multiplier chi
BALL_INNER = 3.0 / 4.0
BALL_OUTER = 4.0 / 3.0

# Resolution band used by spectral_tail_ratio, as fractions of k_max
TAIL_BAND = (1.0 / 3.0, 1.0 / 2.0)


class NonFiniteFieldError(ValueError):
    """Raised when a field carries NaN or infinite samples."""


class GridTooCoarseError(ValueError):
    """Raised when a grid cannot host the dyadic blocks up to j_max >= 1."""


@dataclass(frozen=True)
class PeriodicGrid:
    """
    Uniform periodic grid on [-L, L) with N samples.

    Sample points are x_i = -L + i*dx, so x = 0 is always a sample point and
    the reflection x -> -x maps the grid onto itself (index i -> -i mod N).

    Args:
        half_width: L, half the box length
        n_points: N, an even integer >= 8
    """

    half_width: float = 10.0
    n_points: int = 2048

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 8 or self.n_points % 2:
            raise ValueError(f"n_points must be an even integer >= 8, got {self.n_points}")
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"half_width must be a positive finite length, got {self.half_width}")
        object.__setattr__(self, 'half_width', float(self.half_width))
        object.__setattr__(self, 'n_points', int(self.n_points))

    @property
    def length(self) -> float:
        return 2.0 * self.half_width

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_width + self.dx * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """k_m = pi*m/L in FFT order; index N/2 holds the unpaired mode -N/2."""
        k = np.fft.fftfreq(self.n_points, d=self.dx) * 2.0 * np.pi
        k.flags.writeable = False
        return k

    @cached_property
    def sorted_wavenumbers(self) -> np.ndarray:
        """k_m for m = -N/2, ..., N/2 - 1 (strictly increasing)."""
        m = np.arange(-self.n_points // 2, self.n_points // 2)
        k = np.pi * m / self.half_width
        k.flags.writeable = False
        return k

    @cached_property
    def rfft_wavenumbers(self) -> np.ndarray:
        """Non-negative wavenumbers matching numpy's rfft layout (last entry = Nyquist)."""
        k = np.pi * np.arange(self.n_points // 2 + 1) / self.half_width
        k.flags.writeable = False
        return k

    @property
    def k_max(self) -> float:
        """Magnitude of the Nyquist wavenumber pi*N/(2L)."""
        return np.pi * self.n_points / self.length

    @cached_property
    def reflection_index(self) -> np.ndarray:
        """Index map of x -> -x on the periodic grid."""
        idx = (-np.arange(self.n_points)) % self.n_points
        idx.flags.writeable = False
        return idx

    def nearest_index(self, x0: float) -> int:
        """Index of the grid point closest to x0 (periodically)."""
        offset = (x0 + self.half_width) % self.length
        return int(np.round(offset / self.dx)) % self.n_points


@dataclass(frozen=True, eq=False)
class Field:
    """
    Real-valued samples of a scalar function on a PeriodicGrid.

    Samples are copied and frozen on construction. Non-finite samples are
    rejected unless the field is explicitly flagged as post-blow-up.
    """

    grid: PeriodicGrid
    samples: np.ndarray
    post_blowup: bool = False

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.shape != (self.grid.n_points,):
            raise ValueError(
                f"field has shape {samples.shape}, grid expects ({self.grid.n_points},)"
            )
        if not self.post_blowup:
            bad = np.count_nonzero(~np.isfinite(samples))
            if bad:
                raise NonFiniteFieldError(f"field has {bad} non-finite samples")
        samples.flags.writeable = False
        object.__setattr__(self, 'samples', samples)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, func) -> 'Field':
        return cls(grid, func(np.array(grid.x)))

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: float) -> 'Field':
        return cls(grid, np.full(grid.n_points, float(value)))

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> 'Field':
        return cls.constant(grid, 0.0)

    def with_samples(self, samples) -> 'Field':
        return Field(self.grid, samples)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.samples)))

    def __add__(self, other):
        return self.with_samples(self.samples + _samples_of(other))

    def __sub__(self, other):
        return self.with_samples(self.samples - _samples_of(other))

    def __mul__(self, other):
        return self.with_samples(self.samples * _samples_of(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_samples(-self.samples)


def _samples_of(value):
    return value.samples if isinstance(value, Field) else value


def _require_finite(f: Field):
    if not f.is_finite():
        raise NonFiniteFieldError(
            f"non-finite samples in field on grid N={f.grid.n_points}; "
            "spectral operations need finite input"
        )


# ----------------------------------------------------------------------------
# Multiplier tables (rfft layout), cached per grid
# ----------------------------------------------------------------------------

def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@lru_cache(maxsize=32)
def derivative_multiplier(grid: PeriodicGrid) -> np.ndarray:
    """i*k in rfft layout with the unpaired Nyquist mode zeroed."""
    ik = 1j * grid.rfft_wavenumbers.astype(complex)
    ik[-1] = 0.0
    return _frozen(ik)


@lru_cache(maxsize=32)
def dealias_mask(grid: PeriodicGrid) -> np.ndarray:
    """2/3-rule mask: keeps modes |m| < N/3."""
    m = np.arange(grid.n_points // 2 + 1)
    return _frozen(3 * m < grid.n_points)


@lru_cache(maxsize=64)
def exponential_filter(grid: PeriodicGrid, strength: float = 36.0, order: int = 16) -> np.ndarray:
    """exp(-strength * (|k|/k_max)^order) in rfft layout."""
    ratio = grid.rfft_wavenumbers / grid.k_max
    return _frozen(np.exp(-strength * ratio ** order))


def derivative_samples(samples: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Spectral derivative of raw samples (no validation)."""
    return np.fft.irfft(derivative_multiplier(grid) * np.fft.rfft(samples), n=grid.n_points)


def dealiased_product(a: np.ndarray, b: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Pointwise product with both factors and the result truncated by the 2/3 rule."""
    mask = dealias_mask(grid)
    n = grid.n_points
    a_low = np.fft.irfft(np.fft.rfft(a) * mask, n=n)
    b_low = np.fft.irfft(np.fft.rfft(b) * mask, n=n)
    return np.fft.irfft(np.fft.rfft(a_low * b_low) * mask, n=n)


def spectral_tail_ratio(samples: np.ndarray, grid: PeriodicGrid, band: Tuple[float, float] = TAIL_BAND) -> float:
    """
    Largest Fourier amplitude in the band [band[0], band[1]] * k_max relative
    to the largest amplitude overall. Zero for the zero field.
    """
    coeffs = np.abs(np.fft.rfft(samples))
    peak = coeffs.max()
    if peak == 0.0:
        return 0.0
    ratio = grid.rfft_wavenumbers / grid.k_max
    in_band = (ratio >= band[0]) & (ratio <= band[1])
    return float(coeffs[in_band].max() / peak)


def _rfft_l2(coeffs: np.ndarray, grid: PeriodicGrid) -> float:
    """L2 norm on the box from rfft coefficients (Parseval)."""
    weights = np.full(coeffs.shape, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    energy = np.sum(weights * np.abs(coeffs) ** 2)
    return float(np.sqrt(grid.length * energy) / grid.n_points)


# ----------------------------------------------------------------------------
# Operations
# ----------------------------------------------------------------------------

def spectral_derivative(f: Field) -> Field:
    """
    Derivative by wavenumber multiplication.

    Args:
        f: finite field

    Returns:
        Field: d f / dx, with the unpaired mode -N/2 zeroed

    Raises:
        NonFiniteFieldError: if f has NaN or infinite samples
    """
    _require_finite(f)
    return Field(f.grid, derivative_samples(f.samples, f.grid))


def _smooth_tail(t: np.ndarray) -> np.ndarray:
    positive = t > 0
    safe = np.where(positive, t, 1.0)
    return np.where(positive, np.exp(-1.0 / safe), 0.0)


def chi(xi) -> np.ndarray:
    """Ball multiplier: 1 for |xi| <= 3/4, 0 for |xi| >= 4/3, C-infinity in between."""
    t = (np.abs(np.asarray(xi, dtype=float)) - BALL_INNER) / (BALL_OUTER - BALL_INNER)
    t = np.clip(t, 0.0, 1.0)
    left = _smooth_tail(1.0 - t)
    right = _smooth_tail(t)
    return left / (left + right)


def phi(xi) -> np.ndarray:
    """Annulus multiplier phi(xi) = chi(xi/2) - chi(xi), supported in 3/4 <= |xi| <= 8/3."""
    xi = np.asarray(xi, dtype=float)
    return chi(xi / 2.0) - chi(xi)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """
    Tabulated Littlewood-Paley multipliers of one grid.

    multipliers[j + 1] holds block j for j = -1, ..., j_max (rfft layout).
    j_max is the first index whose low-pass chi(2^-j D) is the identity on the
    grid band, so block j_max is empty up to rounding.
    """

    grid: PeriodicGrid
    j_max: int
    chi_table: np.ndarray
    multipliers: np.ndarray

    j_min = -1

    def multiplier(self, j: int) -> np.ndarray:
        if not self.j_min <= j <= self.j_max:
            raise IndexError(f"block index {j} outside [{self.j_min}, {self.j_max}]")
        return self.multipliers[j + 1]

    def low_pass(self, j: int) -> np.ndarray:
        """chi(2^-j k) at the grid wavenumbers."""
        return chi(self.grid.rfft_wavenumbers / 2.0 ** j)

    @property
    def indices(self) -> range:
        return range(self.j_min, self.j_max + 1)


@lru_cache(maxsize=32)
def build_dyadic_partition(grid: PeriodicGrid) -> DyadicPartition:
    """
    Build the chi / phi multiplier tables for a grid.

    Args:
        grid: PeriodicGrid

    Returns:
        DyadicPartition with blocks -1..j_max

    Raises:
        GridTooCoarseError: if j_max < 1, i.e. k_max <= 3/4
    """
    j_max = 0
    while BALL_INNER * 2.0 ** j_max < grid.k_max:
        j_max += 1
    if j_max < 1:
        raise GridTooCoarseError(
            f"grid (L={grid.half_width}, N={grid.n_points}) resolves k_max={grid.k_max:.3f}; "
            "at least two dyadic shells are needed"
        )

    k = grid.rfft_wavenumbers
    chi_table = chi(k)
    rows = [chi_table]
    for j in range(j_max + 1):
        rows.append(chi(k / 2.0 ** (j + 1)) - chi(k / 2.0 ** j))
    multipliers = np.array(rows)
    multipliers.flags.writeable = False
    chi_table.flags.writeable = False
    logger.debug(f"Dyadic partition for N={grid.n_points}, L={grid.half_width}: j_max={j_max}")
    return DyadicPartition(grid=grid, j_max=j_max, chi_table=chi_table, multipliers=multipliers)


@dataclass(frozen=True, eq=False)
class LPDecomposition:
    """Dyadic blocks Delta_j f, j = -1..j_max, of one field."""

    partition: DyadicPartition
    blocks: Tuple[Field, ...]

    @property
    def j_min(self) -> int:
        return self.partition.j_min

    @property
    def j_max(self) -> int:
        return self.partition.j_max

    def block(self, j: int) -> Field:
        self.partition.multiplier(j)
        return self.blocks[j + 1]

    def reconstruct(self) -> Field:
        return Field(self.partition.grid, np.sum([b.samples for b in self.blocks], axis=0))

    def block_l2_norms(self) -> np.ndarray:
        return np.array([l2_norm(b) for b in self.blocks])


def lp_decompose(f: Field) -> LPDecomposition:
    """
    Littlewood-Paley decomposition f = sum_j Delta_j f.

    Args:
        f: finite field

    Returns:
        LPDecomposition whose blocks sum back to f
    """
    _require_finite(f)
    partition = build_dyadic_partition(f.grid)
    coeffs = np.fft.rfft(f.samples)
    n = f.grid.n_points
    blocks = tuple(Field(f.grid, np.fft.irfft(m * coeffs, n=n)) for m in partition.multipliers)
    return LPDecomposition(partition=partition, blocks=blocks)


def low_freq_truncate(f: Field, j: int) -> Field:
    """
    Low-frequency cut-off S_j f = chi(2^-j D) f.

    Args:
        f: finite field
        j: truncation index, j >= 0

    Returns:
        Field: S_j f (equal to f once j >= j_max)
    """
    if j < 0:
        raise ValueError(f"truncation index must be >= 0, got {j}")
    _require_finite(f)
    table = chi(f.grid.rfft_wavenumbers / 2.0 ** j)
    return Field(f.grid, np.fft.irfft(table * np.fft.rfft(f.samples), n=f.grid.n_points))


def block_norms(f: Field) -> np.ndarray:
    """||Delta_j f||_L2 for j = -1..j_max, computed by Parseval."""
    _require_finite(f)
    partition = build_dyadic_partition(f.grid)
    coeffs = np.fft.rfft(f.samples)
    return np.array([_rfft_l2(m * coeffs, f.grid) for m in partition.multipliers])


def besov_norm(f: Field, s: float, r=1) -> float:
    """
    Inhomogeneous Besov norm B^s_{2,r} for r = 1 or r = infinity.

    r = 1:   sum_j 2^(js) ||Delta_j f||_L2
    r = inf: sup_j 2^(js) ||Delta_j f||_L2
    """
    norms = block_norms(f)
    j = np.arange(-1, norms.size - 1)
    weighted = 2.0 ** (j * s) * norms
    if r == 1:
        return float(np.sum(weighted))
    if r in (math.inf, 'inf'):
        return float(np.max(weighted))
    raise ValueError(f"r must be 1 or inf, got {r!r}")


def sobolev_norm(f: Field, s: float) -> float:
    """H^s norm (sum (1 + k^2)^s |f_k|^2)^(1/2) with box normalization."""
    _require_finite(f)
    coeffs = np.fft.fft(f.samples)
    weights = (1.0 + f.grid.wavenumbers ** 2) ** s
    energy = np.sum(weights * np.abs(coeffs) ** 2)
    return float(np.sqrt(f.grid.length * energy) / f.grid.n_points)


def l2_norm(f: Field) -> float:
    return float(np.sqrt(np.sum(f.samples ** 2) * f.grid.dx))


def linf_norm(f: Field) -> float:
    return float(np.max(np.abs(f.samples)))
