# -*- coding: utf-8 -*-
"""校准测试"""

from dataclasses import replace

import numpy as np
import pytest

from core.approx_pricer import ApproxParams, ModelKind, price_otm, sample_params
from core.bs_core import QuoteContext
from core.calibration import (
    OptionChain,
    OptionQuote,
    build_otm_chain,
    calibrate_fixed_lambda,
    calibrate_free_lambda,
    chain_from_params,
    fit_all_families,
    historical_vol,
    iv_objective,
    objective,
)
from core.data_loader import DiscountCurve
from core.errors import DomainError
from core.synthetic import DEFAULT_MATURITIES_DAYS, DEFAULT_STRIKES_REL

STRIKES = np.linspace(80.0, 120.0, 9)
DAYS = (58, 121, 240, 331)
LAMBDA = 0.04385
AVG_VAR = 0.2922 ** 2
CURVE = DiscountCurve.flat(0.047771)
TRUTH = ApproxParams(ModelKind.SEVEN_PARAM, LAMBDA, AVG_VAR, (-0.0015, 0.001, -0.005), (-0.001, -0.001, -0.06))


def _chain(params=TRUTH, days=DAYS):
    return chain_from_params(params, 100.0, STRIKES, days, CURVE, "2006-01-03")


def _noisy_chain(level=0.003, seed=1):
    """在真实隐含波动率上加乘性噪声后重建虚值期权链"""
    ivs = _chain().column("observed_iv").reshape(len(DAYS), len(STRIKES))
    rng = np.random.default_rng(seed)
    noisy = ivs * (1.0 + level * rng.standard_normal(ivs.shape))
    return build_otm_chain(noisy, noisy, STRIKES, DAYS, 100.0, CURVE, "2006-01-03", AVG_VAR)


def test_generated_chain_layout():
    chain = _chain()
    assert len(chain) == len(STRIKES) * len(DAYS)
    assert chain.maturity_days() == list(DAYS)
    assert np.all(np.isfinite(chain.column("observed_iv")))
    for quote in chain.quotes:
        assert quote.side == ("put" if quote.strike < 100.0 / quote.discount else "call")


def test_objective_is_zero_on_generated_chain():
    assert objective(_chain(), TRUTH) < 1e-18


def test_objective_counts_vegas():
    params = sample_params(ModelKind.FIVE_PARAM)
    B = CURVE.discount(0.5)
    model = float(price_otm(params, QuoteContext(100.0, 90.0, B, 0.5), True))
    quote = OptionQuote(0.5, 90.0, model + 2.5, 0.2, "put", B, 2.5, 182)
    chain = OptionChain("2006-01-03", 100.0, [quote], 0.04)
    assert objective(chain, params) == pytest.approx(1.0, rel=1e-10)


def test_scheme_a_recovers_corrections():
    strikes = 100.0 * np.asarray(DEFAULT_STRIKES_REL)
    chain = chain_from_params(TRUTH, 100.0, strikes, DEFAULT_MATURITIES_DAYS, CURVE, "2006-01-03")
    assert len(chain) == 104
    result = calibrate_fixed_lambda(chain, LAMBDA, "7p")
    np.testing.assert_allclose(result.params.v_vector, TRUTH.v_vector, rtol=1e-8, atol=1e-12)
    assert result.objective < 1e-18
    assert result.scheme == "A" and result.lambda_source == "spread"
    assert not result.diagnostics["rank_deficient"]
    np.testing.assert_allclose(result.model_ivs, chain.column("observed_iv"), atol=1e-7)


def test_scheme_a_sv_worse_than_five_param():
    chain = _chain()
    five = calibrate_fixed_lambda(chain, LAMBDA, "5p")
    sv = calibrate_fixed_lambda(chain, LAMBDA, "sv")
    assert sv.params.lambda_bar == 0.0
    assert sv.objective > five.objective


def test_single_maturity_is_rank_deficient():
    result = calibrate_fixed_lambda(_chain(days=(121,)), LAMBDA, "7p")
    assert result.diagnostics["rank_deficient"]
    assert result.diagnostics["rank"] < 6


@pytest.mark.parametrize(
    "truth, tol",
    [
        (TRUTH, 1e-3),
        (TRUTH.restricted_to(ModelKind.FIVE_PARAM), 1e-4),
        (TRUTH.restricted_to(ModelKind.THREE_PARAM), 1e-4),
    ],
)
def test_scheme_b_recovers_intensity(truth, tol):
    result = calibrate_free_lambda(_chain(truth), truth.kind)
    assert result.params.lambda_bar == pytest.approx(LAMBDA, abs=tol)
    assert result.lambda_source == "fitted"
    assert result.diagnostics["lambda_max"] == 0.5


def test_scheme_b_finds_no_default_in_sv_data():
    truth = sample_params(ModelKind.SV_ONLY).replace(avg_var=AVG_VAR)
    result = calibrate_free_lambda(_chain(truth), "7p")
    assert result.params.lambda_bar < 1e-3


def test_three_param_overstates_intensity():
    truth = TRUTH.replace(v_eps=(-0.0015, 0.001, -0.03), v_delta=(-0.001, -0.001, 0.0))
    three = calibrate_free_lambda(_chain(truth), "3p")
    assert three.params.lambda_bar > LAMBDA + 0.01


def test_family_objectives_are_nested():
    results = fit_all_families(_noisy_chain())
    obj = {kind.value: result.objective for kind, result in results.items()}
    slack = 1e-10 * obj["sv"]
    assert obj["7p"] <= obj["5p"] + slack
    assert obj["5p"] <= obj["3p"] + slack
    assert obj["5p"] <= obj["sv"] + slack
    assert results[ModelKind.SV_ONLY].params.lambda_bar == 0.0


def test_fit_all_families_scheme_checks():
    chain = _chain()
    with pytest.raises(DomainError):
        fit_all_families(chain, "A")
    with pytest.raises(DomainError):
        fit_all_families(chain, "C")
    results = fit_all_families(chain, "a", LAMBDA)
    assert [kind.value for kind in results] == ["7p", "5p", "3p", "sv"]
    assert all(r.params.lambda_bar == LAMBDA for k, r in results.items() if k is not ModelKind.SV_ONLY)


def test_fitted_point_is_stationary():
    chain = _noisy_chain()
    fitted = calibrate_fixed_lambda(chain, LAMBDA, "5p")
    f0 = objective(chain, fitted.params)
    assert f0 == pytest.approx(fitted.objective, rel=1e-8)
    h = 1e-4
    step = np.array([0.0, h, 0.0, 0.0])
    f1 = objective(chain, fitted.params.with_v(fitted.params.free_values + step))
    f2 = objective(chain, fitted.params.with_v(fitted.params.free_values + 2 * step))
    assert f1 > f0
    assert f2 - f0 == pytest.approx(4.0 * (f1 - f0), rel=1e-4)


def test_vega_scaling_keeps_argmin():
    chain = _noisy_chain()
    scaled = replace(chain, quotes=[replace(q, market_vega=3.0 * q.market_vega) for q in chain.quotes])
    base = calibrate_fixed_lambda(chain, LAMBDA, "5p")
    other = calibrate_fixed_lambda(scaled, LAMBDA, "5p")
    np.testing.assert_allclose(other.params.v_vector, base.params.v_vector, rtol=1e-8, atol=1e-12)
    assert other.objective == pytest.approx(base.objective / 9.0, rel=1e-8)


def test_price_objective_tracks_iv_objective():
    chain = _noisy_chain()
    result = calibrate_fixed_lambda(chain, LAMBDA, "7p")
    ratio = iv_objective(chain, result) / result.objective
    assert 0.9 < ratio < 1.1


def test_historical_vol():
    assert historical_vol(np.full(300, 50.0)) == 0.0

    steps = 0.01 * np.where(np.arange(252) % 2 == 0, 1.0, -1.0)
    prices = 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(steps)]))
    assert historical_vol(prices) == pytest.approx(0.01 ** 2 * 252, rel=1e-9)

    rng = np.random.default_rng(2)
    returns = rng.normal(0.0, 0.2922 / np.sqrt(252), 252)
    gbm = 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(returns)]))
    assert abs(historical_vol(gbm) / 0.2922 ** 2 - 1.0) < 4.0 * np.sqrt(2.0 / 252)

    with pytest.raises(DomainError):
        historical_vol(prices[:100])
    with pytest.raises(DomainError):
        historical_vol(-prices)


def test_build_otm_chain_full_grid(flat_curve):
    strikes = 100.0 * np.asarray(DEFAULT_STRIKES_REL)
    days = list(DEFAULT_MATURITIES_DAYS)
    ivs = np.full((len(days), len(strikes)), 0.25)
    chain = build_otm_chain(ivs, ivs, strikes, days, 100.0, flat_curve, "2006-01-03")
    assert len(chain) == 104
    np.testing.assert_array_equal(chain.column("observed_iv"), 0.25)
    assert chain.avg_var == pytest.approx(0.0625)

    wing = chain.quotes[0]
    assert wing.strike == pytest.approx(70.0) and wing.side == "put"
    assert 0.0 < wing.observed_price < 1.0
    assert wing.market_vega > 0.0


def test_build_otm_chain_averages_and_fills(flat_curve):
    call = np.array([[0.30, np.nan, 0.20]])
    put = np.array([[0.20, 0.25, np.nan]])
    chain = build_otm_chain(call, put, [90.0, 100.0, 110.0], [91], 100.0, flat_curve)
    np.testing.assert_allclose(chain.column("observed_iv"), [0.25, 0.25, 0.20])


def test_build_otm_chain_rejects_bad_grids(flat_curve):
    ivs = np.full((2, 3), 0.2)
    with pytest.raises(DomainError):
        build_otm_chain(ivs, ivs[:, :2], [90.0, 100.0, 110.0], [30, 60], 100.0, flat_curve)
    with pytest.raises(DomainError):
        build_otm_chain(-ivs, ivs, [90.0, 100.0, 110.0], [30, 60], 100.0, flat_curve)
    with pytest.raises(DomainError):
        build_otm_chain(np.full((2, 3), np.nan), np.full((2, 3), np.nan), [90.0, 100.0, 110.0], [30, 60], 100.0, flat_curve)


def test_filter_maturities():
    chain = _chain()
    assert chain.filter_maturities(None) is chain
    assert chain.filter_maturities([121, 240]).maturity_days() == [121, 240]
    with pytest.raises(DomainError):
        chain.filter_maturities([999])


def test_quote_and_chain_invariants():
    with pytest.raises(DomainError):
        OptionQuote(0.5, 90.0, 1.0, 0.2, "straddle", 0.98, 1.0)
    with pytest.raises(DomainError):
        OptionQuote(0.5, 90.0, 1.0, 0.2, "put", 0.98, 0.0)
    with pytest.raises(DomainError):
        OptionChain("2006-01-03", 100.0, [], 0.04)
