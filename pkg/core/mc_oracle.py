#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Monte Carlo 定价模块
对 (log S, Y, Z, Q, U) 做 Euler–Maruyama 模拟，违约以生存贴现 e^{−∫λ} 积掉，
五个驱动全部使用对偶变量，同一批路径同时估计多个支付（公共随机数）
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from core.approx_pricer import price_call
from core.bs_core import QuoteContext
from core.effective_params import effective_params
from core.errors import SimulationConfigError
from core.model_spec import MCModelSpec
from utils.logger import get_logger
from utils.random_streams import BLOCK_PAIRS, block_generator, split_pairs

logger = get_logger()

PAYOFF_KINDS = ("call", "put", "bond", "stock")


@dataclass(frozen=True)
class Payoff:
    """到期支付：call K、put K、零回收债券 bond、贴现股价 stock"""

    kind: str
    strike: float = 0.0

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise SimulationConfigError(f"未知的支付类型: {self.kind}（可选 {'/'.join(PAYOFF_KINDS)}）")
        if self.kind in ("call", "put") and not self.strike > 0:
            raise SimulationConfigError(f"{self.kind} 需要正的行权价: {self.strike}")

    @property
    def label(self) -> str:
        return f"{self.kind} {self.strike:g}" if self.kind in ("call", "put") else self.kind

    @classmethod
    def parse(cls, text: Union[str, "Payoff"]) -> "Payoff":
        """解析 "call:100"、"put:90"、"bond"、"stock" """
        if isinstance(text, Payoff):
            return text
        kind, _, strike = str(text).strip().lower().partition(":")
        try:
            return cls(kind, float(strike) if strike else 0.0)
        except ValueError:
            raise SimulationConfigError(f"无法解析支付: {text}")

    def evaluate(self, s_T: np.ndarray, discount: np.ndarray, B: float) -> np.ndarray:
        """discount = B·e^{−∫λ}"""
        if self.kind == "call":
            return discount * np.maximum(s_T - self.strike, 0.0)
        if self.kind == "put":
            return self.strike * B - discount * np.minimum(self.strike, s_T)
        if self.kind == "bond":
            return discount
        return discount * s_T


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo 估计，标准误按对偶对计"""

    mean: float
    std_error: float
    n_paths: int
    n_steps: int
    seed: int
    payoff: str = ""


def min_steps(spec: MCModelSpec, T: float) -> int:
    """步长约束 n_steps ≥ ceil(T·100 / min(1, 10ε))"""
    return int(math.ceil(T * 100.0 / min(1.0, 10.0 * spec.eps) - 1e-9))


def correlated_increments(spec: MCModelSpec, dt: float, rng_state: np.random.Generator, n: int = 1) -> np.ndarray:
    """
    生成 n 组五维布朗增量，形状 (n, 5)，列顺序 W⁰..W⁴
    非半正定相关矩阵抛 CorrelationError
    """
    if not dt > 0:
        raise SimulationConfigError(f"时间步长必须为正: {dt}")
    factor = spec.correlation_factor()
    return np.sqrt(dt) * rng_state.standard_normal((n, 5)) @ factor.T


def _check_config(spec: MCModelSpec, T: float, n_steps: int, n_paths: int):
    if not T > 0:
        raise SimulationConfigError(f"到期时间必须为正: T={T}")
    if n_paths < 2 or n_paths % 2:
        raise SimulationConfigError(f"路径数必须是不小于 2 的偶数（对偶变量）: {n_paths}")
    required = min_steps(spec, T)
    if n_steps < required:
        raise SimulationConfigError(f"时间步太少: n_steps={n_steps}，ε={spec.eps} 时至少需要 {required} 步")


def _simulate_block(spec, factor, payoffs, T, n_steps, seed, block, n_pairs):
    """模拟一个路径块，返回每个支付的对偶对平均值 (len(payoffs), n_pairs)"""
    gen = block_generator(seed, block)
    dt = T / n_steps
    sqrt_dt = math.sqrt(dt)
    n = 2 * n_pairs

    fast = math.sqrt(2.0) / math.sqrt(spec.eps)
    slow = math.sqrt(spec.delta)
    y_vol, q_vol = spec.v * fast, spec.v_tilde * fast
    z_vol, u_vol = slow * spec.g, slow * spec.g_tilde

    log_s = np.full(n, math.log(spec.x0))
    y = np.full(n, spec.y0)
    z = np.full(n, spec.z0)
    q = np.full(n, spec.q0)
    u = np.full(n, spec.u0)
    int_lambda = np.zeros(n)

    sig = spec.vol(y, z)
    lam = spec.beta * sig * sig + spec.f(q, u)
    for _ in range(n_steps):
        half = sqrt_dt * gen.standard_normal((n_pairs, 5)) @ factor.T
        dw = np.concatenate([half, -half])

        log_s = log_s + (spec.r + lam - 0.5 * sig * sig) * dt + sig * dw[:, 0]
        y_next = y + ((spec.m - y) / spec.eps - y_vol * spec.Lambda) * dt + y_vol * dw[:, 1]
        z_next = z + (spec.delta * spec.kappa * (spec.theta - z) - z_vol * spec.Gamma) * dt + z_vol * dw[:, 2]
        q_next = q + ((spec.m_tilde - q) / spec.eps - q_vol * spec.Lambda_tilde) * dt + q_vol * dw[:, 3]
        u_next = (
            u
            + (spec.delta * spec.kappa_tilde * (spec.theta_tilde - u) - u_vol * spec.Gamma_tilde) * dt
            + u_vol * dw[:, 4]
        )
        y, z, q, u = y_next, z_next, q_next, u_next

        sig = spec.vol(y, z)
        lam_next = spec.beta * sig * sig + spec.f(q, u)
        int_lambda += 0.5 * (lam + lam_next) * dt
        lam = lam_next

    B = math.exp(-spec.r * T)
    s_T = np.exp(log_s)
    discount = B * np.exp(-int_lambda)
    values = np.empty((len(payoffs), n_pairs))
    for i, payoff in enumerate(payoffs):
        path_values = payoff.evaluate(s_T, discount, B)
        values[i] = 0.5 * (path_values[:n_pairs] + path_values[n_pairs:])
    return values


def simulate_prices(
    spec: MCModelSpec,
    payoffs: Sequence[Union[str, Payoff]],
    T: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    workers: Optional[int] = None,
) -> List[MCEstimate]:
    """用同一批路径估计多个支付，结果与线程数无关"""
    payoffs = [Payoff.parse(p) for p in payoffs]
    if not payoffs:
        raise SimulationConfigError("至少需要一个支付")
    _check_config(spec, T, n_steps, n_paths)
    factor = spec.correlation_factor()

    blocks = split_pairs(n_paths // 2, BLOCK_PAIRS)
    workers = workers or min(4, len(blocks))
    logger.debug(f"开始模拟: 块数={len(blocks)} 线程数={workers} 步数={n_steps}")

    def run(item):
        block, count = item
        return _simulate_block(spec, factor, payoffs, T, n_steps, seed, block, count)

    try:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                parts = list(executor.map(run, blocks))
        else:
            parts = [run(item) for item in blocks]
    except Exception as e:
        logger.error(f"模拟失败: {e}")
        raise

    # 按块序归约
    pair_values = np.concatenate(parts, axis=1)
    n_pairs = pair_values.shape[1]
    estimates = []
    for payoff, values in zip(payoffs, pair_values):
        mean = float(np.mean(values))
        std_error = float(np.std(values, ddof=1) / math.sqrt(n_pairs)) if n_pairs > 1 else float("nan")
        estimate = MCEstimate(mean, std_error, n_paths, n_steps, seed, payoff.label)
        logger.log_simulation(payoff.label, n_paths, n_steps, mean, std_error)
        estimates.append(estimate)
    return estimates


def simulate_price(
    spec: MCModelSpec,
    payoff: Union[str, Payoff],
    T: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    workers: Optional[int] = None,
) -> MCEstimate:
    """单个支付的 Monte Carlo 估计"""
    return simulate_prices(spec, [payoff], T, n_steps, n_paths, seed, workers)[0]


def _ladder(values: Sequence[float], name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise SimulationConfigError(f"{name} 阶梯不能为空")
    if values.size > 1 and np.any(np.diff(values) >= 0):
        raise SimulationConfigError(f"{name} 阶梯必须严格递减: {values.tolist()}")
    return values


def convergence_study(
    spec_template: MCModelSpec,
    eps_ladder: Sequence[float],
    delta_ladder: Sequence[float],
    strikes: Sequence[float],
    T: float,
    n_paths: int,
    seed: int,
    n_steps: Optional[int] = None,
    convention: str = "displayed",
) -> pd.DataFrame:
    """
    在 (ε, δ) 阶梯上比较 MC 价格与近似价格
    长度为 1 的阶梯会广播到另一阶梯的长度
    返回列: eps, delta, max_error, mc_noise, ratio, inconclusive
    """
    eps_values = _ladder(eps_ladder, "ε")
    delta_values = _ladder(delta_ladder, "δ")
    if eps_values.size != delta_values.size:
        if eps_values.size == 1:
            eps_values = np.full(delta_values.size, eps_values[0])
        elif delta_values.size == 1:
            delta_values = np.full(eps_values.size, delta_values[0])
        else:
            raise SimulationConfigError("ε 与 δ 阶梯长度不一致")

    strikes = np.asarray(strikes, dtype=float)
    rows = []
    for eps, delta in zip(eps_values, delta_values):
        spec = spec_template.with_scales(eps, delta)
        steps = n_steps if n_steps is not None else min_steps(spec, T)
        eff = effective_params(spec, convention=convention)
        ctx = QuoteContext(spec.x0, strikes, math.exp(-spec.r * T), T)
        approx = np.atleast_1d(price_call(eff.params, ctx).value)
        estimates = simulate_prices(spec, [Payoff("call", k) for k in strikes], T, steps, n_paths, seed)

        mc = np.array([e.mean for e in estimates])
        noise = max(e.std_error for e in estimates)
        error = float(np.max(np.abs(mc - approx)))
        scale = eps * abs(math.log(eps)) + delta
        rows.append(
            {
                "eps": float(eps),
                "delta": float(delta),
                "max_error": error,
                "mc_noise": float(noise),
                "ratio": error / scale if scale > 0 else float("nan"),
                "inconclusive": bool(noise > 0.5 * error),
            }
        )
        logger.info(f"收敛研究: ε={eps:g} δ={delta:g} 误差={error:.3g} 噪声={noise:.3g}")
    return pd.DataFrame(rows, columns=["eps", "delta", "max_error", "mc_noise", "ratio", "inconclusive"])
