"""
Tsunami Shallow-Water Model
===========================
State types and right-hand sides of the time-fractional coupled system

    D^beta u + u u_x + g psi_x = 0
    D^beta psi + ((theta + psi) u)_x = 0

for velocity u, wave magnification psi and bathymetry theta. Right-hand sides
are returned in rescaled time s = t^beta / beta, where D^beta becomes d/ds.

The change of variable v = 2 sqrt(psi + theta) gives the symmetric form

    u_s + u u_x + (g/2) v v_x = g theta_x
    v_s + (1/2) v u_x + u v_x = 0

with coefficient matrix A(U) = [[u, g v/2], [v/2, u]] (symmetric for g = 1).

Products are 2/3-rule dealiased and derivatives are spectral.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from tsunami_blowup.conformable import frac_order
from tsunami_blowup.grid_spectral import (
    Field,
    NonFiniteFieldError,
    PeriodicGrid,
    dealiased_product,
    derivative_samples,
    linf_norm,
)

logger = logging.getLogger(__name__)

# Admissibility floor for the symmetric formulation
DELTA_FLOOR = 1e-3


class AdmissibilityError(ValueError):
    """Raised when psi + theta drops below the admissible floor."""

    def __init__(self, message: str, x: float, value: float):
        super().__init__(message)
        self.x = x
        self.value = value


class ParityError(ValueError):
    """Raised when the grid is not symmetric under x -> -x."""


def _same_grid(*fields: Field) -> PeriodicGrid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError(f"fields live on different grids: {grid} vs {f.grid}")
    return grid


@dataclass(frozen=True, eq=False)
class ModelParams:
    """
    Physical parameters: bathymetry theta, order beta and gravity g.

    g = 1 is the normalized choice; other values are kept symbolic throughout.
    """

    theta: Field
    beta: float = 1.0
    g: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'beta', frac_order(self.beta))
        if not (np.isfinite(self.g) and self.g > 0):
            raise ValueError(f"gravity g must be positive, got {self.g}")
        if not self.theta.is_finite():
            raise NonFiniteFieldError("bathymetry theta must be finite")

    @classmethod
    def flat(cls, grid: PeriodicGrid, beta: float = 1.0, g: float = 1.0) -> 'ModelParams':
        return cls(theta=Field.zeros(grid), beta=beta, g=g)

    @property
    def grid(self) -> PeriodicGrid:
        return self.theta.grid

    def theta_x(self) -> np.ndarray:
        return derivative_samples(self.theta.samples, self.grid)


@dataclass(frozen=True, eq=False)
class PhysState:
    """Velocity u and wave magnification psi at one instant."""

    u: Field
    psi: Field

    def __post_init__(self):
        _same_grid(self.u, self.psi)
        if not (self.u.is_finite() and self.psi.is_finite()):
            raise NonFiniteFieldError("physical state must be finite")

    @classmethod
    def from_arrays(cls, grid: PeriodicGrid, u, psi) -> 'PhysState':
        return cls(Field(grid, u), Field(grid, psi))

    @property
    def grid(self) -> PeriodicGrid:
        return self.u.grid


@dataclass(frozen=True, eq=False)
class SymState:
    """
    Symmetrized pair (u, v), v = 2 sqrt(psi + theta).

    Physical states give v >= 0; low-pass truncated data used to start the
    iterative solver may undershoot slightly and are accepted here.
    """

    u: Field
    v: Field

    def __post_init__(self):
        _same_grid(self.u, self.v)

    @classmethod
    def from_arrays(cls, grid: PeriodicGrid, u, v) -> 'SymState':
        return cls(Field(grid, u), Field(grid, v))

    @property
    def grid(self) -> PeriodicGrid:
        return self.u.grid


def _depth(state: PhysState, params: ModelParams) -> np.ndarray:
    _same_grid(state.u, params.theta)
    return state.psi.samples + params.theta.samples


def admissibility_floor(state: PhysState, params: ModelParams) -> Tuple[float, float]:
    """Minimum of psi + theta and where it is attained."""
    depth = _depth(state, params)
    i = int(np.argmin(depth))
    return float(depth[i]), float(state.grid.x[i])


def symmetrize(state: PhysState, params: ModelParams, delta: float = 0.0) -> SymState:
    """
    v = 2 sqrt(psi + theta); u unchanged.

    Args:
        state: physical state
        params: model parameters (theta)
        delta: required floor for psi + theta (0 admits vacuum points)

    Raises:
        AdmissibilityError: if min(psi + theta) < delta, with its location
    """
    low, where = admissibility_floor(state, params)
    if low < delta:
        raise AdmissibilityError(
            f"psi + theta = {low:.3e} at x = {where:.6f} is below the floor {delta:g}",
            x=where,
            value=low,
        )
    v = 2.0 * np.sqrt(np.maximum(_depth(state, params), 0.0))
    return SymState(state.u, Field(state.grid, v))


def desymmetrize(state: SymState, params: ModelParams) -> PhysState:
    """psi = v^2/4 - theta; u unchanged."""
    v = state.v.samples
    if np.any(v < 0):
        i = int(np.argmin(v))
        raise AdmissibilityError(
            f"v = {v[i]:.3e} < 0 at x = {state.grid.x[i]:.6f}", x=float(state.grid.x[i]), value=float(v[i])
        )
    _same_grid(state.u, params.theta)
    psi = 0.25 * v ** 2 - params.theta.samples
    return PhysState(state.u, Field(state.grid, psi))


# ----------------------------------------------------------------------------
# Right-hand sides on raw arrays (shared with the steppers)
# ----------------------------------------------------------------------------

def physical_tendency(u, psi, theta, g, grid):
    """(du, dpsi) for raw sample arrays."""
    ux = derivative_samples(u, grid)
    psix = derivative_samples(psi, grid)
    du = -(dealiased_product(u, ux, grid) + g * psix)
    flux = dealiased_product(theta + psi, u, grid)
    dpsi = -derivative_samples(flux, grid)
    return du, dpsi


def symmetric_tendency(u, v, theta_x, g, grid):
    """(du, dv) of the symmetric form for raw sample arrays."""
    ux = derivative_samples(u, grid)
    vx = derivative_samples(v, grid)
    du = g * theta_x - dealiased_product(u, ux, grid) - 0.5 * g * dealiased_product(v, vx, grid)
    dv = -(0.5 * dealiased_product(v, ux, grid) + dealiased_product(u, vx, grid))
    return du, dv


def rhs_physical(state: PhysState, params: ModelParams) -> Tuple[Field, Field]:
    """
    Right-hand side of the physical form in rescaled time.

    Returns:
        (du, dpsi) with du = -(u u_x + g psi_x), dpsi = -((theta + psi) u)_x
    """
    grid = _same_grid(state.u, params.theta)
    du, dpsi = physical_tendency(
        state.u.samples, state.psi.samples, params.theta.samples, params.g, grid
    )
    return Field(grid, du), Field(grid, dpsi)


def rhs_symmetric(state: SymState, params: ModelParams) -> Tuple[Field, Field]:
    """
    Right-hand side of the symmetric form in rescaled time.

    Returns:
        (du, dv) with du = g theta_x - u u_x - (g/2) v v_x, dv = -(v u_x / 2 + u v_x)
    """
    grid = _same_grid(state.u, params.theta)
    du, dv = symmetric_tendency(state.u.samples, state.v.samples, params.theta_x(), params.g, grid)
    return Field(grid, du), Field(grid, dv)


def coefficient_matrix(state: SymState, g: float = 1.0) -> np.ndarray:
    """
    Pointwise coefficient matrices A(U) = [[u, g v/2], [v/2, u]], shape (N, 2, 2).

    Symmetric at every point for g = 1; a non-finite v breaks that and raises
    ValueError.
    """
    u = state.u.samples
    v = state.v.samples
    a = np.empty((u.size, 2, 2))
    a[:, 0, 0] = u
    a[:, 0, 1] = 0.5 * g * v
    a[:, 1, 0] = 0.5 * v
    a[:, 1, 1] = u
    if g == 1.0 and not np.array_equal(a, np.swapaxes(a, 1, 2)):
        raise ValueError("coefficient matrix is not symmetric; v holds non-finite samples")
    return a


def characteristic_speeds(state: SymState, g: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues u -/+ sqrt(g) v/2 of A(U), i.e. u -/+ sqrt(g (psi + theta))."""
    half = 0.5 * np.sqrt(g) * state.v.samples
    return state.u.samples - half, state.u.samples + half


class ConservedQuantities(NamedTuple):
    mass: float
    momentum: float


def conserved_quantities(state: PhysState) -> ConservedQuantities:
    """
    Box integrals of psi and u.

    Both are invariants of the flow when theta is constant; with varying
    theta the momentum is only reported.
    """
    dx = state.grid.dx
    return ConservedQuantities(
        mass=float(np.sum(state.psi.samples) * dx),
        momentum=float(np.sum(state.u.samples) * dx),
    )


def parity_check(f: Field, kind: str) -> float:
    """
    Parity defect ||f(x) - f(-x)|| (even) or ||f(x) + f(-x)|| (odd) in L-infinity.

    Raises:
        ValueError: for an unknown kind
        ParityError: if the grid does not map onto itself under x -> -x
    """
    if kind not in ('odd', 'even'):
        raise ValueError(f"kind must be 'odd' or 'even', got {kind!r}")
    grid = f.grid
    idx = grid.reflection_index
    mirrored = (grid.x[idx] + grid.x) % grid.length
    mismatch = np.minimum(mirrored, grid.length - mirrored)
    if np.max(mismatch) > 1e-9 * grid.length:
        raise ParityError(f"grid N={grid.n_points}, L={grid.half_width} is not reflection symmetric")
    reflected = f.samples[idx]
    defect = f.samples + reflected if kind == 'odd' else f.samples - reflected
    return linf_norm(Field(grid, defect))
