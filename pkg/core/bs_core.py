#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Black-Scholes 基元模块
可违约股票的领先阶价格 C00、希腊块、vega 与正态分布函数

C00 是把利率换成 r + λ̄、方差换成 ⟨σ²⟩ 的 Black-Scholes 看涨价，
利率 r 折入无风险贴现因子 B(t,T)。所有函数接受标量或可广播的 numpy 数组，
返回同形状结果（标量输入返回 float）。
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.special import erfc

from core.errors import DomainError

ArrayLike = Union[float, np.ndarray]

_SQRT2 = np.sqrt(2.0)
_SQRT2PI = np.sqrt(2.0 * np.pi)


def _out(value):
    """0 维结果转成 float"""
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class QuoteContext:
    """单个（或一组）报价的市场环境"""

    x: ArrayLike
    K: ArrayLike
    B_tT: ArrayLike
    tau: ArrayLike

    def validate(self) -> "QuoteContext":
        """校验不变量，违反时抛 DomainError"""
        x, K, B, tau = self.arrays()
        if not np.all(np.isfinite(x)) or np.any(x <= 0):
            raise DomainError(f"现价必须为正: x={self.x}")
        if not np.all(np.isfinite(K)) or np.any(K < 0):
            raise DomainError(f"行权价不能为负: K={self.K}")
        if np.any(B <= 0) or np.any(B > 1):
            raise DomainError(f"贴现因子必须在 (0, 1] 内: B={self.B_tT}")
        if not np.all(np.isfinite(tau)) or np.any(tau < 0):
            raise DomainError(f"剩余期限不能为负: tau={self.tau}")
        return self

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.asarray(v, dtype=float) for v in (self.x, self.K, self.B_tT, self.tau))

    @property
    def forward(self) -> ArrayLike:
        """远期价格 x / B(t,T)"""
        x, _, B, _ = self.arrays()
        return _out(x / B)


@dataclass(frozen=True)
class LevelParams:
    """领先阶水平参数：平均方差 σ̄² 与平均违约强度 λ̄"""

    avg_var: float
    lambda_bar: float

    def validate(self) -> "LevelParams":
        if not np.isfinite(self.avg_var) or self.avg_var <= 0:
            raise DomainError(f"平均方差必须为正: {self.avg_var}")
        if not np.isfinite(self.lambda_bar) or self.lambda_bar < 0:
            raise DomainError(f"平均违约强度不能为负: {self.lambda_bar}")
        return self

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.avg_var))


def norm_cdf(x: ArrayLike) -> ArrayLike:
    """标准正态分布函数，经互补误差函数计算"""
    return _out(0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2))


def norm_pdf(x: ArrayLike) -> ArrayLike:
    """标准正态密度"""
    x = np.asarray(x, dtype=float)
    return _out(np.exp(-0.5 * x * x) / _SQRT2PI)


def _d_pair(x, K, B, tau, avg_var, lambda_bar):
    sig_sqrt_tau = np.sqrt(avg_var * tau)
    d1 = (np.log(x / (K * B)) + (lambda_bar + 0.5 * avg_var) * tau) / sig_sqrt_tau
    return d1, d1 - sig_sqrt_tau


def _require_regular(K, tau, what: str):
    if np.any(tau <= 0):
        raise DomainError(f"{what}: 剩余期限为 0 时公式奇异")
    if np.any(K <= 0):
        raise DomainError(f"{what}: 行权价为 0 时公式奇异")


def d_tilde(ctx: QuoteContext, lv: LevelParams) -> Tuple[ArrayLike, ArrayLike]:
    """C00 中的 (d̃1, d̃2)，对数价值度使用贴现行权价 K·B"""
    ctx.validate()
    lv.validate()
    x, K, B, tau = ctx.arrays()
    _require_regular(K, tau, "d_tilde")
    d1, d2 = _d_pair(x, K, B, tau, lv.avg_var, lv.lambda_bar)
    return _out(d1), _out(d2)


def _regular_mask(K, tau):
    regular = (K > 0) & (tau > 0)
    return regular, np.where(regular, K, 1.0), np.where(regular, tau, 1.0)


def c00_call(ctx: QuoteContext, lv: LevelParams) -> ArrayLike:
    """领先阶看涨价格 C00 = x N(d̃1) − K B e^{−λ̄τ} N(d̃2)"""
    ctx.validate()
    lv.validate()
    x, K, B, tau = np.broadcast_arrays(*ctx.arrays())

    # tau = 0 时为到期支付 (x − K B)^+，K = 0 时为 x
    limit = np.where(K == 0, x, np.maximum(x - K * B, 0.0))
    regular, K_s, tau_s = _regular_mask(K, tau)
    if not np.any(regular):
        return _out(limit)

    d1, d2 = _d_pair(x, K_s, B, tau_s, lv.avg_var, lv.lambda_bar)
    value = x * norm_cdf(d1) - K_s * B * np.exp(-lv.lambda_bar * tau_s) * norm_cdf(d2)
    return _out(np.where(regular, value, limit))


def c00_put(ctx: QuoteContext, lv: LevelParams) -> ArrayLike:
    """
    领先阶看跌价格，满足平价 P = C − x + K B
    直接按 K B e^{−λ̄τ} N(−d̃2) − x N(−d̃1) + K B (1 − e^{−λ̄τ}) 计算，虚值一侧不丢精度
    """
    ctx.validate()
    lv.validate()
    x, K, B, tau = np.broadcast_arrays(*ctx.arrays())

    limit = np.where(K == 0, 0.0, np.maximum(K * B - x, 0.0))
    regular, K_s, tau_s = _regular_mask(K, tau)
    if not np.any(regular):
        return _out(limit)

    d1, d2 = _d_pair(x, K_s, B, tau_s, lv.avg_var, lv.lambda_bar)
    survival = np.exp(-lv.lambda_bar * tau_s)
    value = K_s * B * survival * norm_cdf(-d2) - x * norm_cdf(-d1) - K_s * B * np.expm1(-lv.lambda_bar * tau_s)
    return _out(np.where(regular, value, limit))


def greek_blocks(ctx: QuoteContext, lv: LevelParams) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    """
    近似价格中的三个算子块
    G1 = x∂x(x²∂²C00/∂x²), G2 = x²∂²C00/∂x², G3 = x∂C00/∂x − C00
    """
    ctx.validate()
    lv.validate()
    x, K, B, tau = np.broadcast_arrays(*ctx.arrays())
    if np.any(tau <= 0):
        raise DomainError("greek_blocks: 剩余期限为 0 时公式奇异")

    # K → 0 时 C00 → x 关于 x 线性，三个块都为 0
    positive = K > 0
    K_s = np.where(positive, K, 1.0)
    sig_sqrt_tau = np.sqrt(lv.avg_var * tau)
    d1, d2 = _d_pair(x, K_s, B, tau, lv.avg_var, lv.lambda_bar)

    g2 = x * norm_pdf(d1) / sig_sqrt_tau
    g3 = K_s * B * np.exp(-lv.lambda_bar * tau) * norm_cdf(d2)
    g1 = g2 * (1.0 - d1 / sig_sqrt_tau)

    zero = np.zeros_like(x)
    return (
        _out(np.where(positive, g1, zero)),
        _out(np.where(positive, g2, zero)),
        _out(np.where(positive, g3, zero)),
    )


def vega(ctx: QuoteContext, sigma: ArrayLike, rate_level: ArrayLike = 0.0) -> ArrayLike:
    """∂C_BS/∂σ = x e^{−d1²/2} √τ / √(2π)，d1 以 (sigma, rate_level) 计算"""
    ctx.validate()
    x, K, B, tau = np.broadcast_arrays(*ctx.arrays())
    sigma = np.asarray(sigma, dtype=float)
    if np.any(tau <= 0):
        raise DomainError("vega: 剩余期限为 0 时公式奇异")
    if np.any(sigma <= 0):
        raise DomainError(f"vega: 波动率必须为正: {sigma}")

    positive = K > 0
    K_s = np.where(positive, K, 1.0)
    d1, _ = _d_pair(x, K_s, B, tau, sigma * sigma, rate_level)
    value = x * norm_pdf(d1) * np.sqrt(tau)
    return _out(np.where(positive, value, 0.0))
