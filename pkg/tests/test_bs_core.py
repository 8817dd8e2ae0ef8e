# -*- coding: utf-8 -*-
"""Black-Scholes 基元测试"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from core.bs_core import (
    LevelParams,
    QuoteContext,
    c00_call,
    c00_put,
    d_tilde,
    greek_blocks,
    norm_cdf,
    norm_pdf,
    vega,
)
from core.errors import DomainError

spots = st.floats(1.0, 1000.0)
moneyness = st.floats(0.2, 5.0)
discounts = st.floats(0.5, 1.0)
taus = st.floats(0.01, 5.0)
vols = st.floats(0.05, 1.0)
intensities = st.floats(0.0, 0.3)


def _call(x, K, B, tau, sigma, lam=0.0):
    return c00_call(QuoteContext(x, K, B, tau), LevelParams(sigma * sigma, lam))


def _black_scholes(x, K, B, tau, sigma):
    d1 = (np.log(x / (K * B)) + 0.5 * sigma * sigma * tau) / (sigma * np.sqrt(tau))
    return x * norm.cdf(d1) - K * B * norm.cdf(d1 - sigma * np.sqrt(tau))


def test_norm_cdf_matches_scipy():
    points = np.array([-30.0, -8.0, -1.5, 0.0, 0.3, 2.0, 8.0])
    np.testing.assert_allclose(norm_cdf(points), norm.cdf(points), rtol=1e-10, atol=1e-16)
    assert norm_cdf(0.0) == 0.5
    assert norm_cdf(-30.0) > 0.0


def test_norm_pdf_matches_scipy():
    points = np.linspace(-6, 6, 25)
    np.testing.assert_allclose(norm_pdf(points), norm.pdf(points), rtol=1e-14)


def test_zero_intensity_is_black_scholes():
    value = _call(100.0, 110.0, 0.96, 0.75, 0.25)
    assert value == pytest.approx(_black_scholes(100.0, 110.0, 0.96, 0.75, 0.25), rel=1e-12)


def test_scalar_in_scalar_out():
    assert isinstance(_call(100.0, 100.0, 1.0, 1.0, 0.2), float)
    out = _call(100.0, np.array([90.0, 100.0]), 1.0, 1.0, 0.2)
    assert out.shape == (2,)


@given(spots, moneyness, discounts, taus, vols, intensities)
def test_put_call_parity(x, m, B, tau, sigma, lam):
    K = m * x
    ctx = QuoteContext(x, K, B, tau)
    lv = LevelParams(sigma * sigma, lam)
    assert c00_call(ctx, lv) - c00_put(ctx, lv) == pytest.approx(x - K * B, abs=1e-11 * max(x, K))


@given(spots, moneyness, discounts, taus, vols, intensities)
def test_call_within_no_arbitrage_bounds(x, m, B, tau, sigma, lam):
    K = m * x
    value = _call(x, K, B, tau, sigma, lam)
    tol = 1e-10 * max(x, K)
    assert max(x - K * B, 0.0) - tol <= value <= x + tol


@given(spots, discounts, taus, vols, intensities)
def test_call_monotone_in_strike_spot_and_intensity(x, B, tau, sigma, lam):
    strikes = x * np.linspace(0.5, 2.0, 16)
    by_strike = _call(x, strikes, B, tau, sigma, lam)
    assert np.all(np.diff(by_strike) <= 1e-10 * x)

    by_spot = np.array([_call(s, x, B, tau, sigma, lam) for s in x * np.linspace(0.5, 2.0, 16)])
    assert np.all(np.diff(by_spot) >= -1e-10 * x)

    lower = _call(x, x, B, tau, sigma, lam)
    higher = _call(x, x, B, tau, sigma, lam + 0.05)
    assert higher >= lower - 1e-10 * x


def test_expiry_and_zero_strike_limits():
    lv = LevelParams(0.04, 0.02)
    expired = QuoteContext(100.0, np.array([90.0, 120.0]), 0.95, 0.0)
    np.testing.assert_allclose(c00_call(expired, lv), [100.0 - 85.5, 0.0])
    np.testing.assert_allclose(c00_put(expired, lv), [0.0, 114.0 - 100.0])

    free = QuoteContext(100.0, 0.0, 0.95, 1.0)
    assert c00_call(free, lv) == 100.0
    assert c00_put(free, lv) == 0.0


def test_d_tilde_singular_inputs():
    lv = LevelParams(0.04, 0.0)
    with pytest.raises(DomainError):
        d_tilde(QuoteContext(100.0, 100.0, 1.0, 0.0), lv)
    with pytest.raises(DomainError):
        d_tilde(QuoteContext(100.0, 0.0, 1.0, 1.0), lv)


def test_d_tilde_values():
    d1, d2 = d_tilde(QuoteContext(100.0, 100.0, 1.0, 1.0), LevelParams(0.04, 0.0))
    assert d1 == pytest.approx(0.1)
    assert d2 == pytest.approx(-0.1)


@pytest.mark.parametrize(
    "bad",
    [
        dict(x=-1.0, K=100.0, B_tT=1.0, tau=1.0),
        dict(x=100.0, K=-5.0, B_tT=1.0, tau=1.0),
        dict(x=100.0, K=100.0, B_tT=1.2, tau=1.0),
        dict(x=100.0, K=100.0, B_tT=0.0, tau=1.0),
        dict(x=100.0, K=100.0, B_tT=1.0, tau=-0.1),
    ],
)
def test_context_invariants(bad):
    with pytest.raises(DomainError):
        QuoteContext(**bad).validate()


def test_level_invariants():
    with pytest.raises(DomainError):
        LevelParams(0.0, 0.0).validate()
    with pytest.raises(ValueError):
        LevelParams(0.04, -0.01).validate()


GRID_STRIKES = np.linspace(60.0, 150.0, 10)
GRID_VOLS = np.linspace(0.2, 0.65, 10)
GRID_TAUS = np.array([0.25, 0.5, 1.0, 2.0, 3.0])


@pytest.mark.parametrize("sigma", GRID_VOLS)
def test_greek_blocks_match_finite_differences(sigma):
    x, lam = 100.0, 0.04385
    K, tau = np.meshgrid(GRID_STRIKES, GRID_TAUS)
    B = np.exp(-0.047771 * tau)
    lv = LevelParams(sigma ** 2, lam)
    h = 1e-4 * x

    def call(s):
        return c00_call(QuoteContext(s, K, B, tau), lv)

    def second(s):
        return greek_blocks(QuoteContext(s, K, B, tau), lv)[1]

    def first_diff(step):
        return x * (second(x + step) - second(x - step)) / (2 * step)

    g1, g2, g3 = greek_blocks(QuoteContext(x, K, B, tau), lv)
    fd_g3 = x * (call(x + h) - call(x - h)) / (2 * h) - call(x)
    fd_g2 = x * x * (call(x + h) - 2 * call(x) + call(x - h)) / (h * h)
    # Richardson 外推消去 h² 项
    fd_g1 = (4.0 * first_diff(h / 2) - first_diff(h)) / 3.0

    tol = 1e-6 * x
    np.testing.assert_allclose(g3, fd_g3, rtol=0, atol=tol)
    np.testing.assert_allclose(g2, fd_g2, rtol=0, atol=tol)
    np.testing.assert_allclose(g1, fd_g1, rtol=0, atol=tol)


@pytest.mark.parametrize("sigma", GRID_VOLS)
def test_vega_matches_finite_differences_and_g2(sigma):
    x = 100.0
    K, tau = np.meshgrid(GRID_STRIKES, GRID_TAUS)
    ctx = QuoteContext(x, K, np.exp(-0.047771 * tau), tau)
    h = 1e-4 * sigma

    def price(s):
        return c00_call(ctx, LevelParams(s * s, 0.0))

    analytic = vega(ctx, sigma)
    fd = (price(sigma + h) - price(sigma - h)) / (2 * h)
    np.testing.assert_allclose(analytic, fd, rtol=0, atol=1e-6 * x)

    g2 = greek_blocks(ctx, LevelParams(sigma ** 2, 0.0))[1]
    np.testing.assert_allclose(analytic, tau * sigma * g2, rtol=1e-12)
    g2_lam = greek_blocks(ctx, LevelParams(sigma ** 2, 0.04385))[1]
    np.testing.assert_allclose(vega(ctx, sigma, 0.04385), tau * sigma * g2_lam, rtol=1e-12)


def test_greek_blocks_positive():
    strikes = np.linspace(50.0, 200.0, 31)
    for tau in (0.1, 0.5, 2.0):
        _, g2, g3 = greek_blocks(QuoteContext(100.0, strikes, 0.95, tau), LevelParams(0.09, 0.03))
        assert np.all(g2 > 0)
        assert np.all(g3 > 0)


def test_greek_blocks_reject_expiry():
    with pytest.raises(DomainError):
        greek_blocks(QuoteContext(100.0, 100.0, 1.0, 0.0), LevelParams(0.04, 0.0))


def test_vega_matches_finite_difference():
    ctx = QuoteContext(100.0, 100.0, 1.0, 1.0)
    h = 1e-5
    up = c00_call(ctx, LevelParams((0.2 + h) ** 2, 0.0))
    down = c00_call(ctx, LevelParams((0.2 - h) ** 2, 0.0))
    assert vega(ctx, 0.2) == pytest.approx((up - down) / (2 * h), abs=1e-6 * 100.0)
    assert vega(ctx, 0.2) == pytest.approx(100.0 * norm.pdf(0.1), rel=1e-12)


def test_vega_rejects_nonpositive_vol():
    with pytest.raises(DomainError):
        vega(QuoteContext(100.0, 100.0, 1.0, 1.0), 0.0)
