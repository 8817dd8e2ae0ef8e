# -*- coding: utf-8 -*-
"""零回收债券测试"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from core.approx_pricer import ApproxParams, ModelKind
from core.bond_pricer import (
    BondParams,
    YieldSpreadPoint,
    bhat,
    effective_bond_params,
    implied_spread,
    shortest_maturity_spread,
    spread_to_lambda,
)
from core.errors import DomainError


def test_leading_order_bond():
    B = np.exp(-0.047 * 2.0)
    assert bhat(BondParams(0.04385), B, 2.0) == pytest.approx(B * np.exp(-0.04385 * 2.0), rel=1e-15)
    assert bhat(BondParams(0.0), B, 2.0) == pytest.approx(B, rel=1e-15)
    assert bhat(BondParams(0.04385, 0.002, 0.0005), B, 0.0) == B


def test_corrected_bond():
    B = np.exp(-0.047 * 2.0)
    value = bhat(BondParams(0.04385, 0.002, 0.0005), B, 2.0)
    expected = B * np.exp(-0.04385 * 2.0) * (1.0 + 0.002 * 2.0 - 0.5 * 0.0005 * 4.0)
    assert value == pytest.approx(expected, rel=1e-15)


def test_bond_rejects_bad_inputs():
    with pytest.raises(DomainError):
        bhat(BondParams(0.02), 0.9, -1.0)
    with pytest.raises(DomainError):
        bhat(BondParams(-0.02), 0.9, 1.0)
    with pytest.raises(DomainError):
        bhat(BondParams(0.02), 1.5, 1.0)


@given(st.floats(0.0, 0.5), st.floats(0.01, 5.0), st.floats(0.5, 1.0))
def test_spread_round_trip(lam, tau, B):
    price = bhat(BondParams(lam), B, tau)
    assert price <= B
    assert implied_spread(price, 1.0, B, tau) == pytest.approx(lam, abs=1e-12)


def test_bond_decreasing_in_intensity():
    prices = [bhat(BondParams(lam), 0.95, 3.0) for lam in np.linspace(0.0, 0.3, 7)]
    assert np.all(np.diff(prices) < 0)


def test_implied_spread_values():
    B, tau = 0.96, 1.5
    assert implied_spread(100.0 * B, 100.0, B, tau) == 0.0
    assert implied_spread(100.0 * B * np.exp(-0.05 * tau), 100.0, B, tau) == pytest.approx(0.05, rel=1e-12)
    with pytest.raises(DomainError):
        implied_spread(100.0, 100.0, B, tau)
    with pytest.raises(DomainError):
        implied_spread(0.0, 100.0, B, tau)


def test_spread_to_lambda_identity():
    assert spread_to_lambda(YieldSpreadPoint(0.5, 0.04385)) == 0.04385
    assert spread_to_lambda(YieldSpreadPoint(0.5, 0.0)) == 0.0


def test_spread_point_invariants():
    with pytest.raises(DomainError):
        YieldSpreadPoint(0.0, 0.01)
    with pytest.raises(DomainError):
        YieldSpreadPoint(1.0, -0.01)


def test_shortest_maturity_spread():
    points = [
        YieldSpreadPoint(2.0, 0.05, "2006-01-03"),
        YieldSpreadPoint(0.5, 0.04, "2006-01-03"),
        YieldSpreadPoint(0.25, 0.03, "2006-01-04"),
    ]
    assert shortest_maturity_spread(points, "2006-01-03").spread == 0.04
    assert shortest_maturity_spread(points).spread == 0.03
    with pytest.raises(DomainError):
        shortest_maturity_spread(points, "2006-02-01")


def test_bond_params_follow_option_corrections():
    params = ApproxParams(ModelKind.SEVEN_PARAM, 0.03, 0.04, (0.0, 0.0, 0.002), (0.0, 0.0, -0.004))
    bond = effective_bond_params(params)
    assert bond == BondParams(0.03, 0.002, -0.008)
