#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
隐含波动率模块
Black-Scholes 反解、领先阶隐含波动率 I0、一阶修正展开与隐含波动率曲面
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Sequence

import numpy as np
import pandas as pd

from core.approx_pricer import ApproxParams, price_call
from core.bs_core import (
    ArrayLike,
    LevelParams,
    QuoteContext,
    _out,
    c00_call,
    c00_put,
    d_tilde,
    greek_blocks,
    norm_cdf,
    norm_pdf,
    vega,
)
from core.errors import DomainError, ImpliedVolError
from utils.logger import get_logger

logger = get_logger()

VOL_MIN = 1e-4
VOL_MAX = 5.0
PRICE_TOL = 1e-10
_MAX_ITER = 200

FLAG_OK = "ok"
FLAG_FAILED = "inversion_failed"
FLAG_ARBITRAGE = "arbitrage"


@dataclass(frozen=True)
class IVExpansion:
    """I ≈ I0 + √ε I1ε + √δ I1δ"""

    i0: ArrayLike
    corr_eps: ArrayLike
    corr_delta: ArrayLike

    @property
    def total(self) -> ArrayLike:
        return _out(np.asarray(self.i0) + np.asarray(self.corr_eps) + np.asarray(self.corr_delta))


@dataclass
class SurfaceGrid:
    """隐含波动率曲面，iv 与 flags 的形状为 (期限数, 行权价数)"""

    strikes: np.ndarray
    maturities: np.ndarray
    iv: np.ndarray
    flags: np.ndarray
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        """展开为长表 (maturity_days, strike, iv, flag)"""
        n_mat, n_strike = self.iv.shape
        days = np.rint(np.asarray(self.maturities, dtype=float) * 365.0).astype(int)
        return pd.DataFrame(
            {
                "maturity_days": np.repeat(days, n_strike),
                "strike": np.tile(np.asarray(self.strikes, dtype=float), n_mat),
                "iv": self.iv.ravel(),
                "flag": self.flags.ravel(),
            }
        )

    def count_flags(self) -> Dict[str, int]:
        values, counts = np.unique(self.flags, return_counts=True)
        return {str(v): int(c) for v, c in zip(values, counts)}


def _bs_otm(x, kb, sigma, tau, is_put):
    """无违约 BS 的虚值一侧价格（利率折入 kb）"""
    sig_sqrt_tau = sigma * np.sqrt(tau)
    d1 = (np.log(x / kb) + 0.5 * sigma * sigma * tau) / sig_sqrt_tau
    d2 = d1 - sig_sqrt_tau
    call = x * norm_cdf(d1) - kb * norm_cdf(d2)
    put = kb * norm_cdf(-d2) - x * norm_cdf(-d1)
    return np.where(is_put, put, call), x * norm_pdf(d1) * np.sqrt(tau)


def _solve(target, x, kb, tau, is_put):
    """
    逐元素保护式 Newton：维护 [lo, hi] 括号，Newton 步越出括号时改用二分
    返回 (vol, status)，status: 0 成功，-1 低于下界，1 高于上界，2 未收敛
    """
    lo = np.full(target.shape, VOL_MIN)
    hi = np.full(target.shape, VOL_MAX)
    p_lo, _ = _bs_otm(x, kb, lo, tau, is_put)
    p_hi, _ = _bs_otm(x, kb, hi, tau, is_put)
    tol = PRICE_TOL * x

    status = np.zeros(target.shape, dtype=int)
    status[target < p_lo - tol] = -1
    status[target > p_hi + tol] = 1
    active = status == 0

    # Brenner-Subrahmanyam 初值
    sigma = np.clip(np.sqrt(2.0 * np.pi / tau) * target / x, 0.05, 1.0)
    sigma = np.where(np.abs(target - p_lo) <= tol, VOL_MIN, sigma)
    done = ~active

    for _ in range(_MAX_ITER):
        value, v = _bs_otm(x, kb, sigma, tau, is_put)
        diff = value - target
        converged = np.abs(diff) <= 0.01 * tol
        done = done | converged | (hi - lo <= 1e-15 * np.maximum(sigma, 1.0))
        if np.all(done):
            break
        lo = np.where(diff < 0, sigma, lo)
        hi = np.where(diff > 0, sigma, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = sigma - diff / v
        use_newton = (v > 0) & np.isfinite(newton) & (newton > lo) & (newton < hi)
        stepped = np.where(use_newton, newton, 0.5 * (lo + hi))
        sigma = np.where(done, sigma, stepped)

    value, _ = _bs_otm(x, kb, sigma, tau, is_put)
    status[(status == 0) & (np.abs(value - target) > tol)] = 2
    return sigma, status


def _prepare(price, ctx: QuoteContext):
    ctx.validate()
    x, K, B, tau = np.broadcast_arrays(*ctx.arrays())
    price = np.broadcast_to(np.asarray(price, dtype=float), x.shape)
    if np.any(tau <= 0) or np.any(K <= 0):
        raise DomainError("隐含波动率反解要求 tau > 0 且 K > 0")
    return price, x, K * B, tau


def _to_otm(price, x, kb):
    """看涨价换成虚值一侧价格，K B < x 时用平价换成看跌"""
    is_put = kb < x
    return np.where(is_put, price - x + kb, price), is_put


def invert_bs(price: float, ctx: QuoteContext) -> float:
    """
    解 C_BS(x; I, 0; K·B, τ) = price，利率已折入 B
    price 必须严格位于 (max(x − K B, 0), x) 内，否则抛 ImpliedVolError
    """
    price, x, kb, tau = _prepare(price, ctx)
    if price.size != 1:
        raise DomainError("invert_bs 只接受单个报价，数组请用 invert_bs_many")
    p, xv, kbv, tv = (float(a.ravel()[0]) for a in (price, x, kb, tau))

    lower = max(xv - kbv, 0.0)
    if not np.isfinite(p) or p <= lower:
        raise ImpliedVolError(f"价格 {p:.12g} 不高于无套利下界 {lower:.12g}", "lower", p, lower)
    if p >= xv:
        raise ImpliedVolError(f"价格 {p:.12g} 不低于无套利上界 {xv:.12g}", "upper", p, xv)

    target, is_put = _to_otm(np.array([p]), np.array([xv]), np.array([kbv]))
    sigma, status = _solve(target, np.array([xv]), np.array([kbv]), np.array([tv]), is_put)
    if status[0] == -1:
        limit = float(_bs_otm(xv, kbv, VOL_MIN, tv, is_put[0])[0])
        raise ImpliedVolError(f"价格低于波动率 {VOL_MIN} 对应的价格", "lower", p, limit)
    if status[0] == 1:
        limit = float(_bs_otm(xv, kbv, VOL_MAX, tv, is_put[0])[0])
        raise ImpliedVolError(f"价格高于波动率 {VOL_MAX} 对应的价格", "upper", p, limit)
    if status[0] == 2:
        raise ImpliedVolError(f"反解未收敛: price={p:.12g}", "tolerance", p, PRICE_TOL * xv)
    return float(sigma[0])


def invert_otm_many(price: ArrayLike, ctx: QuoteContext, is_put: ArrayLike) -> np.ndarray:
    """按方向直接反解虚值期权价格，失败元素为 NaN"""
    price, x, kb, tau = _prepare(price, ctx)
    is_put = np.broadcast_to(np.asarray(is_put, dtype=bool), x.shape)
    upper = np.where(is_put, kb, x)
    lower = np.where(is_put, np.maximum(kb - x, 0.0), np.maximum(x - kb, 0.0))
    valid = np.isfinite(price) & (price > lower) & (price < upper)

    # 实值一侧先换成虚值，数值更稳
    swap = is_put != (kb < x)
    parity = np.where(is_put, x - kb, kb - x)
    target = np.where(swap, price + parity, price)
    otm_put = kb < x

    safe_target = np.where(valid, target, 0.5 * np.where(otm_put, kb, x))
    sigma, status = _solve(safe_target.ravel(), x.ravel(), kb.ravel(), tau.ravel(), otm_put.ravel())
    sigma = sigma.reshape(x.shape)
    ok = valid & (status.reshape(x.shape) == 0)
    return np.where(ok, sigma, np.nan)


def invert_bs_many(price: ArrayLike, ctx: QuoteContext) -> np.ndarray:
    """invert_bs 的数组版，逐元素反解看涨价，失败元素为 NaN"""
    return invert_otm_many(price, ctx, False)


def i0(ctx: QuoteContext, lv: LevelParams) -> ArrayLike:
    """
    领先阶隐含波动率：C_BS(x; I0, 0; K B, τ) = C_BS(x; σ̄, λ̄; K B, τ)
    λ̄ = 0 时 I0 = σ̄
    """
    lv.validate()
    ctx.validate()
    x, K, B, tau = np.broadcast_arrays(*ctx.arrays())
    if lv.lambda_bar == 0.0:
        return _out(np.full(x.shape, lv.sigma))

    is_put = K * B < x
    price = np.where(is_put, np.asarray(c00_put(ctx, lv)), np.asarray(c00_call(ctx, lv)))
    result = invert_otm_many(price, ctx, is_put)
    if np.any(np.isnan(result)):
        logger.warning(f"I0 反解失败的格点数: {int(np.isnan(result).sum())}")
    return _out(result)


def iv_corrections(params: ApproxParams, ctx: QuoteContext, form: str = "components") -> IVExpansion:
    """
    隐含波动率一阶修正
    form="components": 价格修正除以 vega(I0)
    form="printed": 逐项按闭式求值
    """
    lv = params.level
    base = np.asarray(i0(ctx, lv))
    x, K, B, tau = np.broadcast_arrays(*ctx.arrays())
    v1e, v2e, v3e = params.v_eps
    v1d, v2d, v3d = params.v_delta

    if form == "components":
        g1, g2, g3 = (np.asarray(g) for g in greek_blocks(ctx, lv))
        v0 = np.asarray(vega(ctx, base))
        corr_eps = -tau * (v1e * g1 + v2e * g2 + v3e * g3) / v0
        corr_delta = tau * tau * (v1d * g1 + v2d * g2 + v3d * g3) / v0
    elif form == "printed":
        sig = lv.sigma
        dt1, dt2 = (np.asarray(d) for d in d_tilde(ctx, lv))
        d1 = (np.log(x / (K * B)) + 0.5 * base * base * tau) / (base * np.sqrt(tau))
        e = np.exp(0.5 * (d1 * d1 - dt1 * dt1))
        shape = 1.0 - dt1 / (sig * np.sqrt(tau))
        w = np.sqrt(2.0 * np.pi * tau) * np.exp(0.5 * d1 * d1) * (K / x) * B * norm_cdf(dt2)
        corr_eps = -v1e * e * shape - v2e * e / lv.avg_var - v3e * w
        corr_delta = tau * (v1d * e * shape + v2d * e / lv.avg_var + v3d * w)
    else:
        raise DomainError(f"未知的修正形式: {form}（可选 components/printed）")

    return IVExpansion(_out(base), _out(corr_eps), _out(corr_delta))


def surface(
    params: ApproxParams,
    spot: float,
    strikes: Sequence[float],
    maturities: Sequence[float],
    curve,
    use_expansion: bool = False,
) -> SurfaceGrid:
    """
    在 (期限, 行权价) 网格上计算模型隐含波动率
    maturities 以年计，curve 需提供 discount(T)
    """
    strikes = np.asarray(strikes, dtype=float)
    maturities = np.asarray(maturities, dtype=float)
    if strikes.ndim != 1 or maturities.ndim != 1 or strikes.size == 0 or maturities.size == 0:
        raise DomainError("行权价与期限必须是非空一维序列")

    iv = np.full((maturities.size, strikes.size), np.nan)
    flags = np.full(iv.shape, FLAG_OK, dtype=object)

    for row, T in enumerate(maturities):
        ctx = QuoteContext(spot, strikes, curve.discount(T), T)
        quality = price_call(params, ctx)
        ok = np.asarray(quality.arbitrage_ok, dtype=bool)
        if use_expansion:
            values = np.asarray(iv_corrections(params, ctx).total)
            good = np.isfinite(values) & (values > 0)
        else:
            values = invert_bs_many(quality.value, ctx)
            good = np.isfinite(values)
        iv[row] = np.where(good, values, np.nan)
        flags[row] = np.where(good, FLAG_OK, np.where(ok, FLAG_FAILED, FLAG_ARBITRAGE))

    grid = SurfaceGrid(strikes, maturities, iv, flags, params.kind.value, params.to_dict())
    bad = int(np.sum(flags != FLAG_OK))
    if bad:
        logger.warning(f"曲面中有 {bad} 个格点未得到隐含波动率")
    logger.log_function_call("surface", {"kind": params.kind.value, "grid": iv.shape}, f"{bad} 个失败")
    return grid
