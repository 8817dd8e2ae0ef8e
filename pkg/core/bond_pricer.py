#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
零回收可违约债券模块
近似债券价格、利差与 λ̄ 的换算
"""

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from core.bs_core import ArrayLike, _out
from core.errors import DomainError


@dataclass(frozen=True)
class BondParams:
    """债券近似参数 (λ̄, L, L̃)"""

    lambda_bar: float
    L: float = 0.0
    L_tilde: float = 0.0

    def validate(self) -> "BondParams":
        if not np.isfinite(self.lambda_bar) or self.lambda_bar < 0:
            raise DomainError(f"平均违约强度不能为负: {self.lambda_bar}")
        if not (np.isfinite(self.L) and np.isfinite(self.L_tilde)):
            raise DomainError(f"L 与 L̃ 必须有限: L={self.L}, L̃={self.L_tilde}")
        return self


@dataclass(frozen=True)
class YieldSpreadPoint:
    """某一期限的连续复利信用利差"""

    maturity: float
    spread: float
    date: Optional[str] = None

    def __post_init__(self):
        if not np.isfinite(self.maturity) or self.maturity <= 0:
            raise DomainError(f"利差期限必须为正: {self.maturity}")
        if not np.isfinite(self.spread) or self.spread < 0:
            raise DomainError(f"利差不能为负: {self.spread}")


def bhat(bp: BondParams, B_tT: ArrayLike, tau: ArrayLike) -> ArrayLike:
    """B̂ = B e^{−λ̄τ} (1 + Lτ − L̃τ²/2)"""
    bp.validate()
    B = np.asarray(B_tT, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise DomainError(f"剩余期限不能为负: tau={tau}")
    if np.any(B <= 0) or np.any(B > 1):
        raise DomainError(f"贴现因子必须在 (0, 1] 内: B={B}")
    return _out(B * np.exp(-bp.lambda_bar * tau) * (1.0 + bp.L * tau - 0.5 * bp.L_tilde * tau * tau))


def spread_to_lambda(pt: YieldSpreadPoint) -> float:
    """零回收时领先阶 λ̄ 即为利差"""
    return float(pt.spread)


def implied_spread(price: ArrayLike, face: float, B_tT: ArrayLike, tau: ArrayLike) -> ArrayLike:
    """由债券价格反推连续复利利差 −log(price / (face·B)) / τ"""
    price = np.asarray(price, dtype=float)
    B = np.asarray(B_tT, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(price <= 0):
        raise DomainError(f"债券价格必须为正: {price}")
    if np.any(tau <= 0):
        raise DomainError(f"剩余期限必须为正: tau={tau}")
    ratio = price / (face * B)
    # 留一点舍入余量
    if np.any(ratio > 1.0 + 1e-14):
        raise DomainError(f"债券价格高于无违约价格: price={price}, face·B={face * B}")
    return _out(np.maximum(-np.log(np.minimum(ratio, 1.0)) / tau, 0.0))


def shortest_maturity_spread(points: Iterable[YieldSpreadPoint], date: Optional[str] = None) -> YieldSpreadPoint:
    """取（某日）期限最短的利差点，方案 A 用它固定 λ̄"""
    candidates = [p for p in points if date is None or p.date == date]
    if not candidates:
        raise DomainError(f"没有可用的利差数据: date={date}")
    return min(candidates, key=lambda p: p.maturity)


def effective_bond_params(eff) -> BondParams:
    """
    由有效参数得到与期权修正一致的债券参数
    债券上 (x∂x − 1) 作用为 −1，故 L = V3ε，L̃ = 2 V3δ
    """
    params = getattr(eff, "params", eff)
    return BondParams(params.lambda_bar, params.v_eps[2], 2.0 * params.v_delta[2]).validate()
