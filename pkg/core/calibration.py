#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
校准模块
把各模型族日度校准到虚值期权链：
方案 A 固定 λ̄（最短期债券利差），方案 B 在 [0, λ_max] 上拟合 λ̄

给定 λ̄ 时模型价格对 V 仿射，加权线性最小二乘即为精确全局极小；
方案 B 对 λ̄ 做一维有界极小化，内层始终是精确线性解。
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from core.approx_pricer import ApproxParams, ModelKind, correction_basis, iter_kinds, price_otm
from core.bs_core import LevelParams, QuoteContext, c00_call, c00_put, vega
from core.errors import CalibrationError, DomainError
from core.implied_vol import invert_otm_many
from utils.logger import get_logger

logger = get_logger()

LAMBDA_MAX = 0.5
N_STARTS = 5
_XATOL = 1e-8
# 两个局部极小间距小于此值视为同一个
_MIN_SEPARATION = 1e-3


@dataclass(frozen=True)
class OptionQuote:
    """单个虚值欧式期权报价"""

    maturity: float
    strike: float
    observed_price: float
    observed_iv: float
    side: str
    discount: float
    market_vega: float
    maturity_days: Optional[int] = None

    def __post_init__(self):
        if self.side not in ("call", "put"):
            raise DomainError(f"报价方向必须是 call 或 put: {self.side}")
        if not (self.maturity > 0 and self.strike > 0):
            raise DomainError(f"期限与行权价必须为正: T={self.maturity}, K={self.strike}")
        if not (np.isfinite(self.market_vega) and self.market_vega > 0):
            raise DomainError(f"市场 vega 必须为正: {self.market_vega}")
        if not np.isfinite(self.observed_price):
            raise DomainError(f"观测价格必须有限: {self.observed_price}")

    @property
    def is_put(self) -> bool:
        return self.side == "put"


@dataclass
class OptionChain:
    """某一日的期权链"""

    quote_date: str
    spot: float
    quotes: List[OptionQuote]
    avg_var: float

    def __post_init__(self):
        if not self.quotes:
            raise DomainError(f"期权链为空: {self.quote_date}")
        if not (self.spot > 0 and self.avg_var > 0):
            raise DomainError(f"现价与平均方差必须为正: x={self.spot}, σ̄²={self.avg_var}")
        # 期限内按行权价排序
        self.quotes = sorted(self.quotes, key=lambda q: (q.maturity, q.strike))

    def __len__(self) -> int:
        return len(self.quotes)

    def maturities(self) -> List[float]:
        return sorted({q.maturity for q in self.quotes})

    def maturity_days(self) -> List[int]:
        return sorted({q.maturity_days for q in self.quotes if q.maturity_days is not None})

    def filter_maturities(self, days: Optional[Iterable[int]]) -> "OptionChain":
        """只保留给定天数的期限，None 表示全部保留"""
        if days is None:
            return self
        wanted = {int(d) for d in days}
        kept = [q for q in self.quotes if q.maturity_days in wanted]
        if not kept:
            raise DomainError(f"期限过滤后没有报价: {sorted(wanted)}")
        return replace(self, quotes=kept)

    def context(self) -> QuoteContext:
        return QuoteContext(
            self.spot,
            np.array([q.strike for q in self.quotes]),
            np.array([q.discount for q in self.quotes]),
            np.array([q.maturity for q in self.quotes]),
        )

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(q, name) for q in self.quotes], dtype=float)

    @property
    def is_put(self) -> np.ndarray:
        return np.array([q.is_put for q in self.quotes], dtype=bool)


@dataclass
class CalibrationResult:
    """一次校准的结果"""

    params: ApproxParams
    objective: float
    residuals: np.ndarray
    scheme: str
    lambda_source: str
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    model_ivs: Optional[np.ndarray] = None
    quote_date: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "quote_date": self.quote_date,
            "scheme": self.scheme,
            "lambda_source": self.lambda_source,
            "params": self.params.to_dict(),
            "objective": self.objective,
            "diagnostics": self.diagnostics,
        }


def _base_prices(chain: OptionChain, level: LevelParams) -> np.ndarray:
    ctx = chain.context()
    return np.where(chain.is_put, np.asarray(c00_put(ctx, level)), np.asarray(c00_call(ctx, level)))


def objective(chain: OptionChain, params: ApproxParams) -> float:
    """Σ (O_obs − O_model)² / vega²"""
    try:
        model = price_otm(params, chain.context(), chain.is_put)
    except DomainError as e:
        raise CalibrationError(f"定价失败: {e}") from e
    bad = np.flatnonzero(~np.isfinite(model))
    if bad.size:
        raise CalibrationError(f"以下报价定价失败: {bad.tolist()}", int(bad[0]))
    weighted = (chain.column("observed_price") - model) / chain.column("market_vega")
    return float(np.sum(weighted * weighted))


class _LinearProblem:
    """固定 λ̄ 时的加权线性最小二乘"""

    def __init__(self, chain: OptionChain, kind: ModelKind):
        self.chain = chain
        self.kind = kind
        self.ctx = chain.context()
        self.observed = chain.column("observed_price")
        self.weights = 1.0 / chain.column("market_vega")
        self.evaluations = 0

    def solve(self, lambda_bar: float) -> Tuple[ApproxParams, np.ndarray, Dict[str, Any]]:
        self.evaluations += 1
        level = LevelParams(self.chain.avg_var, lambda_bar)
        try:
            base = _base_prices(self.chain, level)
            basis = correction_basis(self.ctx, level)[:, list(self.kind.free_slots)]
        except DomainError as e:
            raise CalibrationError(f"λ̄={lambda_bar} 时定价失败: {e}") from e
        if not (np.all(np.isfinite(base)) and np.all(np.isfinite(basis))):
            bad = np.flatnonzero(~np.isfinite(base) | ~np.all(np.isfinite(basis), axis=1))
            raise CalibrationError(f"以下报价定价失败: {bad.tolist()}", int(bad[0]))

        design = basis * self.weights[:, None]
        target = (self.observed - base) * self.weights
        solution, _, rank, singular = np.linalg.lstsq(design, target, rcond=None)
        residuals = target - design @ solution
        n_free = len(self.kind.free_slots)
        cond = float(singular[0] / singular[-1]) if singular.size and singular[-1] > 0 else float("inf")
        diagnostics = {"rank": int(rank), "condition": cond, "rank_deficient": bool(rank < n_free)}
        params = ApproxParams(self.kind, lambda_bar, self.chain.avg_var).with_v(solution)
        return params, residuals, diagnostics

    def profile(self, lambda_bar: float) -> float:
        _, residuals, _ = self.solve(lambda_bar)
        return float(np.sum(residuals * residuals))


def _finish(chain, params, residuals, diagnostics, scheme, source) -> CalibrationResult:
    model = price_otm(params, chain.context(), chain.is_put)
    model_ivs = invert_otm_many(model, chain.context(), chain.is_put)
    result = CalibrationResult(
        params=params,
        objective=float(np.sum(residuals * residuals)),
        residuals=residuals,
        scheme=scheme,
        lambda_source=source,
        diagnostics=diagnostics,
        model_ivs=model_ivs,
        quote_date=chain.quote_date,
    )
    if diagnostics.get("rank_deficient"):
        logger.warning(f"{chain.quote_date} {params.kind.value} 设计矩阵秩亏: 秩={diagnostics['rank']}")
    logger.log_calibration(params.kind.value, scheme, params.lambda_bar, result.objective)
    return result


def calibrate_fixed_lambda(chain: OptionChain, lambda_bar: float, family="7p") -> CalibrationResult:
    """方案 A：λ̄ 固定，对自由 V 做加权线性最小二乘"""
    kind = ModelKind.from_label(family)
    if not (np.isfinite(lambda_bar) and lambda_bar >= 0):
        raise DomainError(f"λ̄ 不能为负: {lambda_bar}")
    if kind.lambda_is_zero:
        if lambda_bar != 0:
            logger.debug(f"sv 模型忽略给定的 λ̄={lambda_bar}")
        lambda_bar = 0.0
    problem = _LinearProblem(chain, kind)
    params, residuals, diagnostics = problem.solve(float(lambda_bar))
    source = "fixed" if kind.lambda_is_zero else "spread"
    return _finish(chain, params, residuals, diagnostics, "A", source)


def _distinct_minima(problem: _LinearProblem, minima: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    """合并同一谷底中的极小点：两点之间目标函数不升高即视为同一个"""
    minima = sorted(minima)
    groups: List[Tuple[float, float]] = []
    for lam, value in minima:
        if groups:
            prev_lam, prev_value = groups[-1]
            same = lam - prev_lam <= _MIN_SEPARATION
            if not same:
                middle = problem.profile(0.5 * (lam + prev_lam))
                same = middle <= max(value, prev_value) * (1.0 + 1e-9) + 1e-18
            if same:
                if value < prev_value:
                    groups[-1] = (lam, value)
                continue
        groups.append((lam, value))
    return groups


def calibrate_free_lambda(
    chain: OptionChain,
    family="7p",
    lambda_max: float = LAMBDA_MAX,
    n_starts: int = N_STARTS,
    extra_candidates: Sequence[float] = (),
) -> CalibrationResult:
    """
    方案 B：外层对 λ̄ ∈ [0, λ_max] 做有界一维极小化（多个子区间），内层精确线性解
    端点 0 与 λ_max 总被评估；extra_candidates 中的 λ̄ 也参与比较
    """
    kind = ModelKind.from_label(family)
    if kind.lambda_is_zero:
        result = calibrate_fixed_lambda(chain, 0.0, kind)
        result.scheme = "B"
        result.lambda_source = "fixed"
        return result
    if not (np.isfinite(lambda_max) and lambda_max > 0):
        raise DomainError(f"λ_max 必须为正: {lambda_max}")

    problem = _LinearProblem(chain, kind)
    edges = np.linspace(0.0, lambda_max, n_starts + 1)
    candidates: List[Tuple[float, float]] = [(0.0, problem.profile(0.0)), (lambda_max, problem.profile(lambda_max))]
    for lam in extra_candidates:
        if 0.0 <= lam <= lambda_max:
            candidates.append((float(lam), problem.profile(float(lam))))

    minima: List[Tuple[float, float]] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        found = minimize_scalar(problem.profile, bounds=(lo, hi), method="bounded", options={"xatol": _XATOL})
        lam, value = float(found.x), float(found.fun)
        candidates.append((lam, value))
        interior = lo + 10 * _XATOL < lam < hi - 10 * _XATOL
        at_edge = lam <= 10 * _XATOL or lam >= lambda_max - 10 * _XATOL
        if interior or at_edge:
            minima.append((lam, value))

    best_lambda, best_value = min(candidates, key=lambda item: item[1])
    groups = _distinct_minima(problem, minima) if minima else [(best_lambda, best_value)]

    params, residuals, diagnostics = problem.solve(best_lambda)
    diagnostics.update(
        {
            "non_unimodal": len(groups) > 1,
            "profile_minima": [[lam, value] for lam, value in groups],
            "evaluations": problem.evaluations,
            "lambda_max": lambda_max,
        }
    )
    if diagnostics["non_unimodal"]:
        logger.warning(f"{chain.quote_date} {kind.value} λ̄ 剖面有 {len(groups)} 个局部极小，取最优 λ̄={best_lambda:.6g}")
    return _finish(chain, params, residuals, diagnostics, "B", "fitted")


def fit_all_families(
    chain: OptionChain,
    scheme: str = "B",
    lambda_bar: Optional[float] = None,
    lambda_max: float = LAMBDA_MAX,
) -> Dict[ModelKind, CalibrationResult]:
    """一次拟合四个模型族"""
    scheme = scheme.upper()
    if scheme == "A":
        if lambda_bar is None:
            raise DomainError("方案 A 需要给定 λ̄")
        return {kind: calibrate_fixed_lambda(chain, lambda_bar, kind) for kind in iter_kinds()}
    if scheme != "B":
        raise DomainError(f"未知的方案: {scheme}（可选 A/B）")

    results: Dict[ModelKind, CalibrationResult] = {}
    results[ModelKind.SV_ONLY] = calibrate_free_lambda(chain, ModelKind.SV_ONLY, lambda_max)
    three = calibrate_free_lambda(chain, ModelKind.THREE_PARAM, lambda_max)
    results[ModelKind.THREE_PARAM] = three
    # 被嵌套族的最优 λ̄ 加入候选
    five = calibrate_free_lambda(chain, ModelKind.FIVE_PARAM, lambda_max, extra_candidates=[three.params.lambda_bar])
    results[ModelKind.FIVE_PARAM] = five
    results[ModelKind.SEVEN_PARAM] = calibrate_free_lambda(
        chain, ModelKind.SEVEN_PARAM, lambda_max, extra_candidates=[five.params.lambda_bar]
    )
    return {kind: results[kind] for kind in iter_kinds()}


def iv_objective(chain: OptionChain, result: CalibrationResult) -> float:
    """Σ (I_obs − I_model)²，模型隐含波动率由精确反解得到"""
    model_ivs = result.model_ivs
    if model_ivs is None:
        model = price_otm(result.params, chain.context(), chain.is_put)
        model_ivs = invert_otm_many(model, chain.context(), chain.is_put)
    bad = np.flatnonzero(~np.isfinite(model_ivs))
    if bad.size:
        raise CalibrationError(f"以下报价的模型隐含波动率反解失败: {bad.tolist()}", int(bad[0]))
    diff = chain.column("observed_iv") - model_ivs
    return float(np.sum(diff * diff))


def historical_vol(closing_prices: Sequence[float], window: int = 252) -> float:
    """零均值历史方差估计 252·mean(r²)，r 为最后 window 个对数收益"""
    prices = np.asarray(closing_prices, dtype=float)
    if window < 1:
        raise DomainError(f"窗口长度必须为正: {window}")
    if prices.ndim != 1 or prices.size < window + 1:
        raise DomainError(f"收盘价数量不足: 需要至少 {window + 1} 个，实际 {prices.size}")
    tail = prices[-(window + 1):]
    if not np.all(np.isfinite(tail)) or np.any(tail <= 0):
        raise DomainError("收盘价必须为正")
    returns = np.diff(np.log(tail))
    return float(252.0 * np.mean(returns * returns))


def _otm_quote(spot, strike, T, days, B, iv) -> OptionQuote:
    ctx = QuoteContext(spot, strike, B, T)
    level = LevelParams(iv * iv, 0.0)
    is_put = strike < spot / B
    price = c00_put(ctx, level) if is_put else c00_call(ctx, level)
    return OptionQuote(T, strike, float(price), iv, "put" if is_put else "call", B, float(vega(ctx, iv)), days)


def build_otm_chain(
    call_ivs,
    put_ivs,
    strikes: Sequence[float],
    maturities_days: Sequence[int],
    spot: float,
    curve,
    quote_date: str = "",
    avg_var: Optional[float] = None,
) -> OptionChain:
    """
    由看涨/看跌隐含波动率网格 (期限 × 行权价) 构造虚值欧式期权链
    两侧取平均（缺一侧时用另一侧），K < x/B 为看跌，否则为看涨
    avg_var 缺省时取最短期限上最接近远期的行权价的隐含方差
    """
    call_ivs = np.asarray(call_ivs, dtype=float)
    put_ivs = np.asarray(put_ivs, dtype=float)
    strikes = np.asarray(strikes, dtype=float)
    days = np.asarray(maturities_days, dtype=int)
    shape = (days.size, strikes.size)
    if call_ivs.shape != shape or put_ivs.shape != shape:
        raise DomainError(f"隐含波动率网格形状 {call_ivs.shape}/{put_ivs.shape} 与 (期限, 行权价) {shape} 不一致")
    if np.any(call_ivs[np.isfinite(call_ivs)] <= 0) or np.any(put_ivs[np.isfinite(put_ivs)] <= 0):
        raise DomainError("隐含波动率必须为正")

    with np.errstate(invalid="ignore"):
        averaged = np.nanmean(np.stack([call_ivs, put_ivs]), axis=0)
    quotes = []
    for row, d in enumerate(days):
        T = d / 365.0
        B = float(curve.discount(T))
        for col, K in enumerate(strikes):
            iv = averaged[row, col]
            if np.isfinite(iv):
                quotes.append(_otm_quote(spot, float(K), T, int(d), B, float(iv)))
    if not quotes:
        raise DomainError(f"{quote_date} 没有可用的报价")

    if avg_var is None:
        first = min(quotes, key=lambda q: (q.maturity, abs(q.strike - spot / q.discount)))
        avg_var = first.observed_iv ** 2
        logger.warning(f"{quote_date} 未给出平均方差或收盘价，取近月平值隐含方差 {avg_var:.6g}")
    return OptionChain(quote_date, spot, quotes, float(avg_var))


def chain_from_params(
    params: ApproxParams,
    spot: float,
    strikes: Sequence[float],
    maturities_days: Sequence[int],
    curve,
    quote_date: str = "",
) -> OptionChain:
    """用模型价格直接生成虚值期权链（价格精确，隐含波动率由反解得到）"""
    quotes = []
    for d in maturities_days:
        T = d / 365.0
        B = float(curve.discount(T))
        K = np.asarray(strikes, dtype=float)
        ctx = QuoteContext(spot, K, B, T)
        is_put = K < spot / B
        prices = np.atleast_1d(price_otm(params, ctx, is_put))
        ivs = np.atleast_1d(invert_otm_many(prices, ctx, is_put))
        vegas = np.atleast_1d(vega(ctx, np.where(np.isfinite(ivs), ivs, params.level.sigma)))
        for k, p, iv, w, put in zip(K, prices, ivs, vegas, is_put):
            quotes.append(OptionQuote(T, float(k), float(p), float(iv), "put" if put else "call", B, float(w), int(d)))
    return OptionChain(quote_date, spot, quotes, params.avg_var)
