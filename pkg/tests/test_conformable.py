import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from tsunami_blowup.conformable import (
    TimeSeries,
    conformable_derivative,
    frac_order,
    fractional_integral,
    lifespan_estimate,
    lifespan_scaling,
    optimal_lifespan_order,
    riccati_blowup_bounds,
    riccati_profile,
    time_forward_map,
    time_inverse_map,
)

orders = st.floats(min_value=0.1, max_value=1.0)


@pytest.mark.parametrize('beta', [0.0, -0.5, 1.5, math.nan])
def test_order_must_lie_in_unit_interval(beta):
    with pytest.raises(ValueError, match='beta must lie in'):
        frac_order(beta)


def test_time_series_validation():
    with pytest.raises(ValueError):
        TimeSeries([0.0, 0.5, 0.5], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        TimeSeries([-1.0, 0.5], [1.0, 2.0])
    with pytest.raises(ValueError):
        TimeSeries([0.0, 0.5], [1.0])
    frame = TimeSeries([0.0, 1.0], [2.0, 3.0]).to_frame('f')
    assert list(frame.columns) == ['t', 'f']


# ----------------------------------------------------------------------------
# Derivative
# ----------------------------------------------------------------------------

def test_derivative_of_square():
    t = np.linspace(0.0, 5.0, 51)
    d = conformable_derivative(TimeSeries(t, t ** 2), 0.5)
    # t^(1/2) * 2t at t = 4
    assert d.values[40] == pytest.approx(16.0, rel=1e-12)
    assert not d.singular_at_origin
    assert d.values[0] == 0.0
    assert d.origin_power == pytest.approx(0.5)


def test_derivative_matches_limit_quotient():
    beta = 0.6
    t = np.linspace(0.5, 2.0, 3001)
    d = conformable_derivative(TimeSeries(t, np.sin(t)), beta)
    eps = 1e-7
    for i in (200, 1500, 2800):
        ti = t[i]
        quotient = (math.sin(ti + eps * ti ** (1 - beta)) - math.sin(ti)) / eps
        assert d.values[i] == pytest.approx(quotient, rel=1e-5)


def test_derivative_of_time_map_is_one():
    beta = 0.5
    t = np.linspace(1.0, 2.0, 201)
    d = conformable_derivative(TimeSeries(t, t ** beta / beta), beta)
    np.testing.assert_allclose(d.values, 1.0, atol=1e-4)


def test_derivative_limit_at_origin():
    beta = 0.5
    t = np.linspace(0.0, 1.0, 101)
    d = conformable_derivative(TimeSeries(t, t ** beta / beta), beta)
    assert not d.singular_at_origin
    assert d.values[0] == pytest.approx(1.0, abs=0.1)


@pytest.mark.parametrize('beta', [0.3, 0.5, 0.9, 0.99])
def test_bounded_slope_gives_zero_at_origin(beta):
    t = np.linspace(0.0, 2.0, 401)
    d = conformable_derivative(TimeSeries(t, np.sin(t) + t ** 2), beta)
    assert d.values[0] == 0.0
    assert not d.singular_at_origin
    assert d.origin_power == pytest.approx(1.0 - beta)


def test_classical_order_keeps_the_slope_at_origin():
    t = np.linspace(0.0, 2.0, 401)
    d = conformable_derivative(TimeSeries(t, np.sin(t) + t ** 2), 1.0)
    assert d.values[0] == pytest.approx(1.0, abs=1e-4)
    assert d.origin_power == 0.0


def test_divergent_origin_is_flagged():
    t = np.linspace(0.0, 1.0, 101)
    d = conformable_derivative(TimeSeries(t, t ** 0.1), 0.5)
    assert d.singular_at_origin
    assert math.isnan(d.values[0])
    assert np.all(np.isfinite(d.values[1:]))


def test_derivative_needs_four_samples():
    with pytest.raises(ValueError):
        conformable_derivative(TimeSeries([0.0, 1.0, 2.0], [0.0, 1.0, 4.0]), 0.5)


def test_derivative_is_second_order():
    beta = 0.5
    errors = []
    for dt in (0.01, 0.005):
        t = np.arange(0.0, 2.0 + dt / 2, dt)
        d = conformable_derivative(TimeSeries(t, t ** 3 * np.exp(-t)), beta)
        exact = t ** (1 - beta) * (3 * t ** 2 - t ** 3) * np.exp(-t)
        errors.append(np.max(np.abs(d.values[1:] - exact[1:])))
    assert math.log2(errors[0] / errors[1]) == pytest.approx(2.0, abs=0.1)


def test_derivative_product_rule(rng):
    beta = 0.7
    t = np.linspace(0.5, 1.5, 2001)
    for _ in range(10):
        p = np.polynomial.Polynomial(rng.uniform(-1, 1, 4))
        q = np.polynomial.Polynomial(rng.uniform(-1, 1, 4))
        f, g = p(t), q(t)
        lhs = conformable_derivative(TimeSeries(t, f * g), beta).values
        rhs = (f * conformable_derivative(TimeSeries(t, g), beta).values
               + g * conformable_derivative(TimeSeries(t, f), beta).values)
        np.testing.assert_allclose(lhs, rhs, atol=5e-4)


@given(
    orders,
    st.floats(min_value=-2.0, max_value=2.0),
    st.floats(min_value=0.5, max_value=3.0),
    st.floats(min_value=-2.0, max_value=2.0),
)
def test_derivative_product_rule_for_smooth_pairs(beta, a, omega, c):
    t = np.linspace(0.0, 2.0, 2001)
    f = a * np.sin(omega * t) + 1.0
    g = np.exp(c * t / 2.0)
    lhs = conformable_derivative(TimeSeries(t, f * g), beta).values
    rhs = (f * conformable_derivative(TimeSeries(t, g), beta).values
           + g * conformable_derivative(TimeSeries(t, f), beta).values)
    scale = 1.0 + np.max(np.abs(lhs[1:]))
    np.testing.assert_allclose(lhs[1:], rhs[1:], atol=1e-4 * scale)


# ----------------------------------------------------------------------------
# Integral and time map
# ----------------------------------------------------------------------------

def test_integral_of_identity():
    t = np.linspace(0.0, 1.0, 11)
    result = fractional_integral(TimeSeries(t, t), 0.5)
    assert result.values[0] == 0.0
    assert result.values[-1] == pytest.approx(2.0 / 3.0, rel=1e-12)


@pytest.mark.parametrize('beta', [0.2, 0.5, 1.0])
def test_integral_of_one_is_time_map(beta):
    t = np.linspace(0.0, 3.0, 31)
    result = fractional_integral(TimeSeries(t, np.ones_like(t)), beta)
    np.testing.assert_allclose(result.values, time_forward_map(t, beta), rtol=1e-12, atol=1e-15)


def test_integral_matches_weighted_quadrature():
    beta = 0.3
    t = np.linspace(0.0, 2.0, 2001)
    result = fractional_integral(TimeSeries(t, np.cos(t)), beta)
    oracle, _ = quad(np.cos, 0.0, 2.0, weight='alg', wvar=(beta - 1.0, 0.0))
    assert result.values[-1] == pytest.approx(oracle, rel=1e-5)


@pytest.mark.parametrize('beta', [0.5, 0.9])
def test_integral_inverts_derivative_to_second_order(beta):
    errors = []
    for dt in (0.01, 0.005, 0.0025):
        t = np.arange(0.0, 2.0 + dt / 2, dt)
        f = np.sin(t) + t ** 2
        recovered = fractional_integral(conformable_derivative(TimeSeries(t, f), beta), beta)
        errors.append(np.max(np.abs(recovered.values - (f - f[0]))))
    assert math.log2(errors[0] / errors[1]) == pytest.approx(2.0, abs=0.1)
    assert math.log2(errors[1] / errors[2]) == pytest.approx(2.0, abs=0.1)


def test_origin_power_weights_the_integral():
    # f = t^(1/2) * t with origin_power 1/2: int_0^1 tau^(-1/2) tau^(3/2) d tau = 1/2
    t = np.linspace(0.0, 1.0, 11)
    series = TimeSeries(t, t ** 1.5, origin_power=0.5)
    assert fractional_integral(series, 0.5).values[-1] == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(ValueError):
        TimeSeries(t, t, origin_power=1.0)


def test_integral_needs_origin():
    with pytest.raises(ValueError):
        fractional_integral(TimeSeries([0.5, 1.0], [1.0, 1.0]), 0.5)


@given(orders, st.floats(min_value=0.0, max_value=50.0))
def test_time_map_round_trip(beta, t):
    s = time_forward_map(t, beta)
    assert isinstance(s, float)
    assert time_inverse_map(s, beta) == pytest.approx(t, rel=1e-12, abs=1e-300)


def test_time_map_values():
    assert time_forward_map(4.0, 0.5) == pytest.approx(4.0)
    assert time_inverse_map(4.0, 0.5) == pytest.approx(4.0)
    np.testing.assert_allclose(time_forward_map(np.array([0.0, 1.0]), 1.0), [0.0, 1.0])
    with pytest.raises(ValueError):
        time_forward_map(-1.0, 0.5)


# ----------------------------------------------------------------------------
# Riccati comparison and lifespan
# ----------------------------------------------------------------------------

@pytest.mark.parametrize('u0x, beta, t_paper, t_sharp', [
    (-1.0, 0.5, 1.0, 0.25),
    (-2.0, 1.0, 0.5, 0.5),
    (-1.0, 0.25, 1.0, 0.25 ** 4),
    (-4.0, 0.5, 1.0 / 16.0, 1.0 / 64.0),
])
def test_riccati_bounds(u0x, beta, t_paper, t_sharp):
    bounds = riccati_blowup_bounds(u0x, beta)
    assert bounds.t_paper == pytest.approx(t_paper, rel=1e-14)
    assert bounds.t_sharp == pytest.approx(t_sharp, rel=1e-14)


@given(orders, st.floats(min_value=0.01, max_value=100.0))
def test_sharp_time_never_exceeds_comparison_time(beta, magnitude):
    bounds = riccati_blowup_bounds(-magnitude, beta)
    assert bounds.t_sharp <= bounds.t_paper * (1 + 1e-12)


@pytest.mark.parametrize('u0x', [0.0, 0.5])
def test_riccati_needs_negative_gradient(u0x):
    with pytest.raises(ValueError):
        riccati_blowup_bounds(u0x, 0.5)


@pytest.mark.parametrize('beta', [0.4, 0.7, 1.0])
def test_sharp_time_matches_integrated_riccati(beta):
    w0 = -1.5

    def escape(s, w):
        return w[0] + 1e6
    escape.terminal = True

    sol = solve_ivp(lambda s, w: -w ** 2, (0.0, 10.0), [w0], events=escape, rtol=1e-10, atol=1e-12)
    s_escape = sol.t_events[0][0]
    t_escape = time_inverse_map(s_escape, beta)
    assert t_escape == pytest.approx(riccati_blowup_bounds(w0, beta).t_sharp, rel=1e-4)


def test_riccati_profile():
    values = riccati_profile(-1.0, 1.0, [0.0, 0.5, 2.0])
    np.testing.assert_allclose(values[:2], [-1.0, -2.0])
    assert math.isnan(values[2])
    loose = riccati_profile(-1.0, 0.5, [0.25], sharp=False)
    assert loose[0] == pytest.approx(-2.0)


def test_lifespan_estimate():
    assert lifespan_estimate(1.0, 0.0, 1.0) == pytest.approx(math.log(2.0) / 2.0)
    assert lifespan_estimate(0.0, 0.0, 0.5) == pytest.approx(0.25)
    assert lifespan_estimate(1e-6, 0.0, 1.0) == 1.0
    small = lifespan_estimate(10.0, 5.0, 0.5, C0=2.0)
    assert small == pytest.approx((0.5 * math.log(2.0) / (4.0 * 20.0)) ** 2)
    with pytest.raises(ValueError):
        lifespan_estimate(-1.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        lifespan_estimate(1.0, 0.0, 0.5, C0=0.0)


def test_lifespan_shrinks_with_data_size():
    spans = [lifespan_estimate(n, 0.0, 0.6) for n in (1.0, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(spans, spans[1:]))


def test_optimal_lifespan_order():
    beta, span = optimal_lifespan_order(0.1, 0.0)
    assert beta == pytest.approx(0.27, abs=0.011)
    assert span == pytest.approx(lifespan_scaling(0.1, 0.0, beta))
    assert span > lifespan_scaling(0.1, 0.0, 1.0)

    beta, span = optimal_lifespan_order(6.0, 4.0)
    assert beta == 1.0
    assert span == pytest.approx(0.1)


def test_lifespan_scaling_of_zero_data_is_unbounded():
    assert lifespan_scaling(0.0, 0.0, 0.5) == math.inf
