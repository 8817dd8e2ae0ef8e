#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
合成数据模块
由近似模型参数或五因子模型生成期权隐含波动率面板、利差与曲线文件
"""

import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from core.approx_pricer import ApproxParams, price_call
from core.bond_pricer import BondParams, YieldSpreadPoint, bhat, implied_spread
from core.bs_core import QuoteContext
from core.data_loader import ChainGrid, ChainPanel, DiscountCurve
from core.errors import DomainError
from core.implied_vol import invert_bs_many
from core.mc_oracle import Payoff, min_steps, simulate_prices
from core.model_spec import MCModelSpec
from utils.file_utils import FileUtils
from utils.logger import get_logger

logger = get_logger()

# 默认网格：8 个期限 × 13 个行权价
DEFAULT_MATURITIES_DAYS = (91, 122, 152, 182, 273, 365, 547, 730)
DEFAULT_STRIKES_REL = tuple(np.round(np.linspace(0.7, 1.3, 13), 4))


def _model_ivs(source, strikes, T, spot, curve, n_paths, seed) -> np.ndarray:
    if isinstance(source, ApproxParams):
        ctx = QuoteContext(spot, strikes, curve.discount(T), T)
        return np.atleast_1d(invert_bs_many(price_call(source, ctx).value, ctx))

    B = math.exp(-source.r * T)
    estimates = simulate_prices(
        source, [Payoff("call", k) for k in strikes], T, min_steps(source, T), n_paths, seed
    )
    ctx = QuoteContext(source.x0, strikes, B, T)
    return np.atleast_1d(invert_bs_many(np.array([e.mean for e in estimates]), ctx))


def gen_synthetic(
    source: Union[ApproxParams, MCModelSpec],
    strikes_rel: Sequence[float] = DEFAULT_STRIKES_REL,
    maturities_days: Sequence[int] = DEFAULT_MATURITIES_DAYS,
    spot: float = 100.0,
    curve: Optional[DiscountCurve] = None,
    noise: float = 0.0,
    seed: int = 0,
    quote_date: str = "2006-01-03",
    n_paths: int = 20000,
) -> ChainPanel:
    """
    生成一日的隐含波动率网格
    ApproxParams 用近似价格精确反解；MCModelSpec 用 Monte Carlo 价格，现价取 x0、贴现取常数利率 r
    noise > 0 时对隐含波动率施加乘性高斯噪声；反解失败的格点丢弃并记录
    """
    if noise < 0:
        raise DomainError(f"噪声水平不能为负: {noise}")
    if isinstance(source, MCModelSpec):
        spot = source.x0
    elif not isinstance(source, ApproxParams):
        raise DomainError(f"不支持的数据来源: {type(source).__name__}")
    curve = curve or DiscountCurve.flat(0.0)

    strikes = np.round(spot * np.asarray(strikes_rel, dtype=float), 10)
    days = np.asarray(sorted(int(d) for d in maturities_days), dtype=int)
    if strikes.size == 0 or days.size == 0 or np.any(days <= 0):
        raise DomainError("行权价与期限不能为空，期限天数必须为正")

    ivs = np.vstack([_model_ivs(source, strikes, d / 365.0, spot, curve, n_paths, seed) for d in days])
    if noise > 0:
        rng = np.random.default_rng(seed)
        ivs = ivs * (1.0 + noise * rng.standard_normal(ivs.shape))
        ivs = np.where(ivs > 0, ivs, np.nan)

    dropped = int(np.sum(~np.isfinite(ivs)))
    if dropped:
        logger.warning(f"{quote_date} 有 {dropped} 个格点反解失败，已丢弃")
    grid = ChainGrid(quote_date, strikes, days, ivs, ivs.copy(), dropped)
    return {quote_date: grid}


def synthetic_spreads(
    params: ApproxParams,
    maturities_years: Iterable[float],
    quote_date: str = "2006-01-03",
    bond: Optional[BondParams] = None,
) -> List[YieldSpreadPoint]:
    """零回收债券利差：bond 缺省时为领先阶（等于 λ̄）"""
    bond = bond or BondParams(params.lambda_bar)
    points = []
    for T in maturities_years:
        price = bhat(bond, 1.0, T)
        points.append(YieldSpreadPoint(float(T), float(implied_spread(price, 1.0, 1.0, T)), quote_date))
    return points


def write_chain_csv(panel: ChainPanel, path: Union[str, Path]) -> Path:
    frames = [panel[date].to_frame() for date in sorted(panel)]
    return FileUtils.write_csv_file(path, pd.concat(frames, ignore_index=True))


def write_curve_csv(curve: DiscountCurve, path: Union[str, Path]) -> Path:
    return FileUtils.write_csv_file(path, curve.to_frame())


def write_spreads_csv(points: Sequence[YieldSpreadPoint], path: Union[str, Path]) -> Path:
    frame = pd.DataFrame(
        {
            "date": [p.date or "" for p in points],
            "maturity_years": [p.maturity for p in points],
            "spread": [p.spread for p in points],
        }
    )
    return FileUtils.write_csv_file(path, frame)
