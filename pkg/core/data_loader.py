#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
数据加载模块
读取期权隐含波动率面板、贴现曲线与债券利差 CSV，行级错误带行号
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from core.bond_pricer import YieldSpreadPoint
from core.errors import DataFormatError, DomainError
from utils.logger import get_logger

logger = get_logger()

CHAIN_COLUMNS = ["date", "maturity_days", "strike", "call_iv", "put_iv"]
CURVE_COLUMNS = ["maturity_years", "zero_rate"]
SPREAD_COLUMNS = ["date", "maturity_years", "spread"]
PRICE_COLUMNS = ["date", "close"]


class DiscountCurve:
    """零利率曲线，零利率线性插值，两端平外推"""

    def __init__(self, maturities: Sequence[float], zero_rates: Sequence[float]):
        self.maturities = np.asarray(maturities, dtype=float)
        self.zero_rates = np.asarray(zero_rates, dtype=float)
        if self.maturities.ndim != 1 or self.maturities.size == 0:
            raise DomainError("贴现曲线至少需要一个期限点")
        if self.maturities.shape != self.zero_rates.shape:
            raise DomainError("期限与零利率个数不一致")
        if np.any(self.maturities <= 0) or np.any(np.diff(self.maturities) <= 0):
            raise DomainError(f"曲线期限必须为正且严格递增: {self.maturities.tolist()}")
        if not np.all(np.isfinite(self.zero_rates)):
            raise DomainError("零利率必须有限")

    @classmethod
    def flat(cls, rate: float) -> "DiscountCurve":
        return cls([1.0], [rate])

    def zero_rate(self, T):
        return np.interp(T, self.maturities, self.zero_rates)

    def discount(self, T):
        """B(0, T) = e^{−z(T)·T}"""
        T = np.asarray(T, dtype=float)
        if np.any(T < 0):
            raise DomainError(f"期限不能为负: {T}")
        value = np.exp(-self.zero_rate(T) * T)
        return float(value) if value.ndim == 0 else value

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"maturity_years": self.maturities, "zero_rate": self.zero_rates})


@dataclass
class ChainGrid:
    """某一日的原始隐含波动率网格，形状 (期限数, 行权价数)，缺失为 NaN"""

    date: str
    strikes: np.ndarray
    maturities_days: np.ndarray
    call_iv: np.ndarray
    put_iv: np.ndarray
    dropped: int = 0

    def to_frame(self) -> pd.DataFrame:
        n_mat, n_strike = self.call_iv.shape
        frame = pd.DataFrame(
            {
                "date": self.date,
                "maturity_days": np.repeat(self.maturities_days, n_strike),
                "strike": np.tile(self.strikes, n_mat),
                "call_iv": self.call_iv.ravel(),
                "put_iv": self.put_iv.ravel(),
            }
        )
        return frame.dropna(subset=["call_iv", "put_iv"], how="all").reset_index(drop=True)


ChainPanel = Dict[str, ChainGrid]


def _read_table(path: Union[str, Path], columns: List[str]) -> pd.DataFrame:
    """按字符串读入并检查表头"""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise DataFormatError("文件不存在", str(path))
    except pd.errors.EmptyDataError:
        raise DataFormatError("文件为空", str(path))
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataFormatError(f"CSV 解析失败: {e}", str(path))

    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataFormatError(f"缺少列: {', '.join(missing)}", str(path), 1)
    if frame.empty:
        raise DataFormatError("没有数据行", str(path))
    return frame


def _numeric(frame: pd.DataFrame, column: str, path, allow_empty: bool = False) -> np.ndarray:
    raw = frame[column].str.strip()
    values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
    bad = np.isnan(values) & ~((raw == "").to_numpy() & allow_empty)
    bad |= np.isinf(values)
    if np.any(bad):
        row = int(np.flatnonzero(bad)[0])
        raise DataFormatError(f"{column} 不是有效数值: '{frame[column].iloc[row]}'", str(path), row + 2)
    return values


def _require(mask: np.ndarray, message: str, path, frame: pd.DataFrame, column: str):
    """mask 为 True 的行违反约束"""
    if np.any(mask):
        row = int(np.flatnonzero(mask)[0])
        raise DataFormatError(f"{message}: {column}={frame[column].iloc[row]}", str(path), row + 2)


def load_chain(path: Union[str, Path]) -> ChainPanel:
    """读取期权面板 CSV（date,maturity_days,strike,call_iv,put_iv），按日期分组"""
    frame = _read_table(path, CHAIN_COLUMNS)
    dates = frame["date"].str.strip()
    _require((dates == "").to_numpy(), "日期为空", path, frame, "date")
    days = _numeric(frame, "maturity_days", path)
    strikes = _numeric(frame, "strike", path)
    call_iv = _numeric(frame, "call_iv", path, allow_empty=True)
    put_iv = _numeric(frame, "put_iv", path, allow_empty=True)

    _require((days <= 0) | (days != np.round(days)), "期限天数必须为正整数", path, frame, "maturity_days")
    _require(strikes <= 0, "行权价必须为正", path, frame, "strike")
    _require(call_iv <= 0, "隐含波动率必须为正", path, frame, "call_iv")
    _require(put_iv <= 0, "隐含波动率必须为正", path, frame, "put_iv")
    _require(np.isnan(call_iv) & np.isnan(put_iv), "看涨与看跌隐含波动率不能同时缺失", path, frame, "call_iv")

    table = pd.DataFrame(
        {"date": dates, "maturity_days": days.astype(int), "strike": strikes, "call_iv": call_iv, "put_iv": put_iv}
    )
    duplicated = table.duplicated(subset=["date", "maturity_days", "strike"]).to_numpy()
    _require(duplicated, "重复的报价", path, frame, "strike")

    panel: ChainPanel = {}
    for date, group in table.groupby("date", sort=True):
        call = group.pivot(index="maturity_days", columns="strike", values="call_iv").sort_index().sort_index(axis=1)
        put = group.pivot(index="maturity_days", columns="strike", values="put_iv").reindex_like(call)
        panel[str(date)] = ChainGrid(
            str(date),
            call.columns.to_numpy(dtype=float),
            call.index.to_numpy(dtype=int),
            call.to_numpy(dtype=float),
            put.to_numpy(dtype=float),
        )
    logger.debug(f"加载期权面板: {path} ({len(table)} 行, {len(panel)} 个日期)")
    return panel


def load_curve(path: Union[str, Path]) -> DiscountCurve:
    """读取零利率曲线 CSV（maturity_years,zero_rate），期限必须严格递增"""
    frame = _read_table(path, CURVE_COLUMNS)
    maturities = _numeric(frame, "maturity_years", path)
    rates = _numeric(frame, "zero_rate", path)
    _require(maturities <= 0, "期限必须为正", path, frame, "maturity_years")
    non_monotone = np.concatenate([[False], np.diff(maturities) <= 0])
    _require(non_monotone, "期限必须严格递增", path, frame, "maturity_years")
    return DiscountCurve(maturities, rates)


def load_spreads(path: Union[str, Path]) -> List[YieldSpreadPoint]:
    """读取债券利差 CSV（date,maturity_years,spread）"""
    frame = _read_table(path, SPREAD_COLUMNS)
    maturities = _numeric(frame, "maturity_years", path)
    spreads = _numeric(frame, "spread", path)
    _require(maturities <= 0, "期限必须为正", path, frame, "maturity_years")
    _require(spreads < 0, "利差不能为负", path, frame, "spread")
    dates = frame["date"].str.strip()
    return [YieldSpreadPoint(float(T), float(s), d or None) for d, T, s in zip(dates, maturities, spreads)]


def load_prices(path: Union[str, Path]) -> pd.Series:
    """读取股票收盘价 CSV（date,close），返回按日期升序的序列"""
    frame = _read_table(path, PRICE_COLUMNS)
    dates = frame["date"].str.strip()
    _require((dates == "").to_numpy(), "日期为空", path, frame, "date")
    closes = _numeric(frame, "close", path)
    _require(closes <= 0, "收盘价必须为正", path, frame, "close")
    _require(dates.duplicated().to_numpy(), "重复的日期", path, frame, "date")
    series = pd.Series(closes, index=dates.to_numpy(), name="close").sort_index()
    logger.debug(f"加载收盘价: {path} ({series.size} 个交易日)")
    return series


def closes_up_to(prices: pd.Series, date: str) -> np.ndarray:
    """截至 date（含）的收盘价，日期按 ISO 字符串比较"""
    return prices[prices.index <= date].to_numpy(dtype=float)
