# -*- coding: utf-8 -*-
"""数据加载测试"""

import numpy as np
import pytest

from core.data_loader import DiscountCurve, closes_up_to, load_chain, load_curve, load_prices, load_spreads
from core.errors import DataFormatError, DomainError

CHAIN_CSV = """date,maturity_days,strike,call_iv,put_iv
2006-01-03,30,90,0.31,0.33
2006-01-03,30,100,0.29,
2006-01-03,58,90,0.30,0.31
2006-01-03,58,100,,0.28
2006-01-04,30,100,0.27,0.27
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_flat_single_pillar_curve(tmp_path):
    curve = load_curve(_write(tmp_path, "curve.csv", "maturity_years,zero_rate\n0.5,0.047771\n"))
    assert curve.discount(273 / 365) == pytest.approx(np.exp(-0.047771 * 273 / 365), rel=1e-15)
    assert curve.discount(0.0) == 1.0
    assert curve.zero_rate(10.0) == pytest.approx(0.047771)


def test_curve_interpolates_zero_rates():
    curve = DiscountCurve([0.5, 1.0], [0.04, 0.05])
    assert curve.zero_rate(0.75) == pytest.approx(0.045)
    np.testing.assert_allclose(curve.discount([0.5, 2.0]), np.exp([-0.02, -0.1]))
    with pytest.raises(DomainError):
        curve.discount(-1.0)


def test_curve_rejects_non_monotone_pillars(tmp_path):
    path = _write(tmp_path, "curve.csv", "maturity_years,zero_rate\n1.0,0.04\n0.5,0.045\n")
    with pytest.raises(DataFormatError) as info:
        load_curve(path)
    assert info.value.line == 3
    with pytest.raises(DomainError):
        DiscountCurve([], [])


def test_empty_and_missing_files(tmp_path):
    with pytest.raises(DataFormatError):
        load_curve(_write(tmp_path, "empty.csv", ""))
    with pytest.raises(DataFormatError):
        load_curve(_write(tmp_path, "header.csv", "maturity_years,zero_rate\n"))
    with pytest.raises(DataFormatError):
        load_chain(tmp_path / "missing.csv")
    with pytest.raises(DataFormatError) as info:
        load_chain(_write(tmp_path, "columns.csv", "date,strike\n2006-01-03,100\n"))
    assert info.value.line == 1


def test_load_chain_pivots_by_date(tmp_path):
    panel = load_chain(_write(tmp_path, "chain.csv", CHAIN_CSV))
    assert list(panel) == ["2006-01-03", "2006-01-04"]
    grid = panel["2006-01-03"]
    np.testing.assert_array_equal(grid.strikes, [90.0, 100.0])
    np.testing.assert_array_equal(grid.maturities_days, [30, 58])
    np.testing.assert_allclose(grid.call_iv, [[0.31, 0.29], [0.30, np.nan]])
    np.testing.assert_allclose(grid.put_iv, [[0.33, np.nan], [0.31, 0.28]])
    assert panel["2006-01-04"].call_iv.shape == (1, 1)


@pytest.mark.parametrize(
    "row, line",
    [
        ("2006-01-03,30,110,-0.2,0.3", 7),
        ("2006-01-03,0,110,0.2,0.3", 7),
        ("2006-01-03,30,abc,0.2,0.3", 7),
        ("2006-01-03,30,110,,", 7),
        ("2006-01-03,30,90,0.2,0.2", 7),
    ],
)
def test_chain_errors_carry_line(tmp_path, row, line):
    path = _write(tmp_path, "chain.csv", CHAIN_CSV + row + "\n")
    with pytest.raises(DataFormatError) as info:
        load_chain(path)
    assert info.value.line == line


def test_load_spreads(tmp_path):
    text = "date,maturity_years,spread\n2006-01-03,0.5,0.04385\n,2.0,0.05\n"
    points = load_spreads(_write(tmp_path, "spreads.csv", text))
    assert [p.spread for p in points] == [0.04385, 0.05]
    assert points[0].date == "2006-01-03"
    assert points[1].date is None

    bad = _write(tmp_path, "bad.csv", "date,maturity_years,spread\n2006-01-03,0.5,-0.01\n")
    with pytest.raises(DataFormatError) as info:
        load_spreads(bad)
    assert info.value.line == 2


def test_load_prices_sorts_and_cuts_by_date(tmp_path):
    text = "date,close\n2006-01-04,101.5\n2006-01-02,100.0\n2006-01-03,99.0\n"
    prices = load_prices(_write(tmp_path, "prices.csv", text))
    assert prices.index.tolist() == ["2006-01-02", "2006-01-03", "2006-01-04"]
    np.testing.assert_array_equal(closes_up_to(prices, "2006-01-03"), [100.0, 99.0])
    assert closes_up_to(prices, "2005-12-30").size == 0


@pytest.mark.parametrize(
    "row, line",
    [
        ("2006-01-03,-1.0", 3),
        ("2006-01-03,abc", 3),
        ("2006-01-02,101.0", 3),
        (",101.0", 3),
    ],
)
def test_price_errors_carry_line(tmp_path, row, line):
    path = _write(tmp_path, "prices.csv", f"date,close\n2006-01-02,100.0\n{row}\n")
    with pytest.raises(DataFormatError) as info:
        load_prices(path)
    assert info.value.line == line
