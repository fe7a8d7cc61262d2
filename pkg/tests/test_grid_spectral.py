import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsunami_blowup.grid_spectral import (
    Field,
    GridTooCoarseError,
    NonFiniteFieldError,
    PeriodicGrid,
    besov_norm,
    block_norms,
    build_dyadic_partition,
    chi,
    dealiased_product,
    derivative_samples,
    l2_norm,
    linf_norm,
    low_freq_truncate,
    lp_decompose,
    phi,
    sobolev_norm,
    spectral_derivative,
    spectral_tail_ratio,
)

from .conftest import band_limited, rel_l2

# Calibrated once over random fields and frozen
EMBEDDING_CONSTANT = 2.0
PRODUCT_CONSTANT = 10.0


# ----------------------------------------------------------------------------
# Grid and fields
# ----------------------------------------------------------------------------

def test_grid_layout():
    grid = PeriodicGrid(10.0, 64)
    assert grid.dx == pytest.approx(20.0 / 64, rel=1e-15)
    assert grid.x[0] == -10.0
    assert 0.0 in grid.x
    k = grid.sorted_wavenumbers
    assert np.all(np.diff(k) > 0)
    assert k[0] == pytest.approx(-math.pi * 32 / 10)
    np.testing.assert_allclose(k[1:], -k[1:][::-1])


@pytest.mark.parametrize('n_points', [7, 6, 0, 1025])
def test_grid_rejects_bad_sizes(n_points):
    with pytest.raises(ValueError):
        PeriodicGrid(10.0, n_points)


def test_field_rejects_non_finite(grid):
    samples = np.zeros(grid.n_points)
    samples[3] = np.nan
    with pytest.raises(NonFiniteFieldError):
        Field(grid, samples)
    flagged = Field(grid, samples, post_blowup=True)
    with pytest.raises(NonFiniteFieldError):
        spectral_derivative(flagged)


def test_field_is_read_only(grid):
    f = Field.zeros(grid)
    with pytest.raises(ValueError):
        f.samples[0] = 1.0


# ----------------------------------------------------------------------------
# Derivative
# ----------------------------------------------------------------------------

def test_derivative_of_constant_is_zero(grid):
    assert linf_norm(spectral_derivative(Field.constant(grid, 3.7))) < 1e-12


def test_derivative_of_single_mode(grid):
    L = grid.half_width
    f = Field.from_function(grid, lambda x: np.sin(np.pi * x / L))
    expected = (np.pi / L) * np.cos(np.pi * grid.x / L)
    np.testing.assert_allclose(spectral_derivative(f).samples, expected, atol=1e-12)


def test_derivative_matches_fourth_order_differences():
    grid = PeriodicGrid(10.0, 1024)
    f = Field.from_function(grid, lambda x: x * np.exp(-x ** 2))
    s = f.samples
    h = grid.dx
    fd = (-np.roll(s, -2) + 8 * np.roll(s, -1) - 8 * np.roll(s, 1) + np.roll(s, 2)) / (12 * h)
    assert rel_l2(spectral_derivative(f).samples, fd) < 1e-6


def test_nyquist_mode_is_zeroed():
    grid = PeriodicGrid(1.0, 16)
    nyquist = Field(grid, np.cos(np.pi * np.arange(16)))
    assert linf_norm(spectral_derivative(nyquist)) < 1e-12


def test_dealiased_product_of_resolved_modes_is_exact():
    grid = PeriodicGrid(10.0, 64)
    a = np.sin(np.pi * grid.x / 10)
    b = np.cos(2 * np.pi * grid.x / 10)
    np.testing.assert_allclose(dealiased_product(a, b, grid), a * b, atol=1e-13)


def test_dealiased_advection_term_has_zero_mean(grid, rng):
    u = band_limited(grid, rng, grid.k_max).samples
    ux = derivative_samples(u, grid)
    assert abs(np.mean(dealiased_product(u, ux, grid))) < 1e-10


# ----------------------------------------------------------------------------
# Dyadic partition
# ----------------------------------------------------------------------------

def test_ball_multiplier_at_origin():
    assert chi(0.0) == 1.0
    assert phi(0.0) == 0.0


@given(st.floats(min_value=-50, max_value=50, allow_nan=False))
def test_multipliers_are_valued_in_unit_interval(xi):
    assert 0.0 <= chi(xi) <= 1.0
    assert 0.0 <= phi(xi) <= 1.0


def test_ball_multiplier_plateau_and_support():
    xi = np.linspace(-3, 3, 6001)
    values = chi(xi)
    assert np.all(values[np.abs(xi) <= 0.75] == 1.0)
    assert np.all(values[np.abs(xi) >= 4.0 / 3.0] == 0.0)


def test_partition_of_unity():
    partition = build_dyadic_partition(PeriodicGrid(10.0, 2048))
    total = partition.multipliers.sum(axis=0)
    np.testing.assert_allclose(total, 1.0, atol=1e-12)


def test_block_three_lives_on_its_annulus():
    grid = PeriodicGrid(10.0, 2048)
    partition = build_dyadic_partition(grid)
    k = grid.rfft_wavenumbers
    row = partition.multiplier(3)
    outside = (k < 0.75 * 8 - 1e-9) | (k > 8.0 / 3.0 * 8 + 1e-9)
    assert np.all(row[outside] == 0.0)
    assert row.max() == 1.0


def test_block_minus_one_lives_in_ball():
    grid = PeriodicGrid(10.0, 2048)
    partition = build_dyadic_partition(grid)
    k = grid.rfft_wavenumbers
    assert np.all(partition.multiplier(-1)[k > 4.0 / 3.0] == 0.0)


def test_almost_orthogonality():
    partition = build_dyadic_partition(PeriodicGrid(10.0, 2048))
    for j in range(partition.j_max + 1):
        for jp in range(j + 2, partition.j_max + 1):
            assert np.all(partition.multiplier(j) * partition.multiplier(jp) == 0.0)


def test_top_block_is_empty_and_low_pass_is_identity():
    grid = PeriodicGrid(10.0, 512)
    partition = build_dyadic_partition(grid)
    assert np.max(partition.multiplier(partition.j_max)) < 1e-12
    np.testing.assert_allclose(partition.low_pass(partition.j_max), 1.0, atol=1e-12)


def test_coarse_grid_rejected():
    with pytest.raises(GridTooCoarseError):
        build_dyadic_partition(PeriodicGrid(20.0, 8))


# ----------------------------------------------------------------------------
# Decomposition and truncation
# ----------------------------------------------------------------------------

def test_constant_sits_in_block_minus_one(grid):
    f = Field.constant(grid, 2.5)
    lp = lp_decompose(f)
    np.testing.assert_allclose(lp.block(-1).samples, f.samples, atol=1e-12)
    for j in range(0, lp.j_max + 1):
        assert linf_norm(lp.block(j)) <= 1e-12


def test_single_shell_mode():
    grid = PeriodicGrid(10.0, 1024)
    # k = 18 pi / 10 lies where phi(k / 4) = 1
    k = 18 * np.pi / 10
    f = Field.from_function(grid, lambda x: np.sin(k * x))
    lp = lp_decompose(f)
    np.testing.assert_allclose(lp.block(2).samples, f.samples, atol=1e-12)
    assert linf_norm(lp.block(1)) <= 1e-12
    assert linf_norm(lp.block(3)) <= 1e-12


def test_reconstruction(grid, rng):
    for _ in range(5):
        f = band_limited(grid, rng, grid.k_max)
        assert rel_l2(lp_decompose(f).reconstruct().samples, f.samples) < 1e-10


def test_truncation_at_top_index_is_identity(grid, rng):
    f = band_limited(grid, rng, grid.k_max)
    j_max = build_dyadic_partition(grid).j_max
    assert rel_l2(low_freq_truncate(f, j_max).samples, f.samples) < 1e-12
    assert rel_l2(low_freq_truncate(f, j_max + 3).samples, f.samples) < 1e-12


def test_truncation_keeps_constants(grid):
    f = Field.constant(grid, -1.25)
    np.testing.assert_allclose(low_freq_truncate(f, 0).samples, f.samples, atol=1e-13)


def test_truncation_removes_high_mode(grid):
    L = grid.half_width
    f = Field.from_function(grid, lambda x: np.sin(32 * np.pi * x / L))
    assert linf_norm(low_freq_truncate(f, 0)) <= 1e-10


def test_truncation_index_must_be_non_negative(grid):
    with pytest.raises(ValueError):
        low_freq_truncate(Field.zeros(grid), -1)


# ----------------------------------------------------------------------------
# Norms
# ----------------------------------------------------------------------------

def test_norms_of_zero(grid):
    f = Field.zeros(grid)
    assert besov_norm(f, 1.5, 1) == 0.0
    assert l2_norm(f) == 0.0
    assert linf_norm(f) == 0.0


@pytest.mark.parametrize('s', [-1.0, 0.5, 1.5])
def test_besov_norm_of_constant(grid, s):
    c = -0.7
    expected = 2.0 ** (-s) * abs(c) * math.sqrt(2 * grid.half_width)
    assert besov_norm(Field.constant(grid, c), s, 1) == pytest.approx(expected, rel=1e-10)
    assert besov_norm(Field.constant(grid, c), s, math.inf) == pytest.approx(expected, rel=1e-10)


def test_besov_norm_matches_blockwise_quadrature():
    grid = PeriodicGrid(10.0, 2048)
    u0 = Field.from_function(grid, lambda x: -x * np.exp(-x ** 2))
    lp = lp_decompose(u0)
    oracle = sum(2.0 ** (1.5 * j) * math.sqrt(np.sum(lp.block(j).samples ** 2) * grid.dx) for j in range(-1, lp.j_max + 1))
    assert besov_norm(u0, 1.5, 1) == pytest.approx(oracle, rel=1e-8)


def test_besov_sup_norm_is_largest_weighted_block(grid, rng):
    f = band_limited(grid, rng, 20.0)
    norms = block_norms(f)
    weights = 2.0 ** (0.5 * np.arange(-1, norms.size - 1))
    assert besov_norm(f, 0.5, 'inf') == pytest.approx(np.max(weights * norms), rel=1e-14)
    with pytest.raises(ValueError):
        besov_norm(f, 0.5, 2)


def test_l2_and_linf_of_constant(grid):
    f = Field.constant(grid, -3.0)
    assert linf_norm(f) == 3.0
    assert l2_norm(f) == pytest.approx(3.0 * math.sqrt(20.0), rel=1e-14)


def test_l2_and_linf_of_sine():
    grid = PeriodicGrid(math.pi, 256)
    f = Field.from_function(grid, np.sin)
    assert linf_norm(f) == pytest.approx(1.0, abs=1e-15)
    assert l2_norm(f) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_sobolev_norm(grid, rng):
    f = band_limited(grid, rng, 15.0)
    assert sobolev_norm(f, 0.0) == pytest.approx(l2_norm(f), rel=1e-12)
    k = 5 * np.pi / grid.half_width
    mode = Field.from_function(grid, lambda x: np.cos(k * x))
    assert sobolev_norm(mode, 2.0) == pytest.approx((1 + k ** 2) * l2_norm(mode), rel=1e-12)


def test_spectral_tail_ratio(grid):
    gauss = Field.from_function(grid, lambda x: np.exp(-x ** 2))
    assert spectral_tail_ratio(gauss.samples, grid) < 1e-10
    k = 0.4 * grid.k_max
    assert spectral_tail_ratio(np.cos(round(k * grid.half_width / np.pi) * np.pi * grid.x / grid.half_width), grid) == pytest.approx(1.0)
    assert spectral_tail_ratio(np.zeros(grid.n_points), grid) == 0.0


# ----------------------------------------------------------------------------
# Properties
# ----------------------------------------------------------------------------

def test_bernstein_bounds_on_shells(rng):
    grid = PeriodicGrid(10.0, 1024)
    partition = build_dyadic_partition(grid)
    for trial in range(100):
        j = 1 + trial % 5
        raw = band_limited(grid, rng, grid.k_max)
        block = np.fft.irfft(partition.multiplier(j) * np.fft.rfft(raw.samples), n=grid.n_points)
        f = Field(grid, block)
        ratio = l2_norm(spectral_derivative(f)) / l2_norm(f)
        assert 0.75 * 2 ** j <= ratio <= 8.0 / 3.0 * 2 ** j


def test_besov_embedding_into_linf(grid, rng):
    for _ in range(50):
        f = band_limited(grid, rng, grid.k_max / 3, amplitude=rng.uniform(0.1, 10))
        assert linf_norm(f) <= EMBEDDING_CONSTANT * besov_norm(f, 0.5, 1)


def test_besov_product_estimate(grid, rng):
    for _ in range(50):
        f = band_limited(grid, rng, grid.k_max / 3)
        g = band_limited(grid, rng, grid.k_max / 3)
        lhs = besov_norm(f * g, 0.5, 1)
        assert lhs <= PRODUCT_CONSTANT * besov_norm(f, 0.5, 1) * besov_norm(g, 0.5, 1)
