#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令模块
命令行各子命令的实现：price / calibrate / surface / simulate / spread-series / synth
每个命令接收 RunConfig，返回写出的文件与摘要
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from core.approx_pricer import ApproxParams, ModelKind, price_call, price_put, sample_params
from core.bond_pricer import bhat, effective_bond_params, shortest_maturity_spread, spread_to_lambda
from core.bs_core import QuoteContext
from core.calibration import (
    OptionChain,
    build_otm_chain,
    calibrate_fixed_lambda,
    calibrate_free_lambda,
    fit_all_families,
    historical_vol,
    iv_objective,
)
from core.config_manager import RunConfig
from core.data_loader import DiscountCurve, closes_up_to, load_chain, load_curve, load_prices, load_spreads
from core.effective_params import effective_params
from core.errors import CalibrationError, DomainError, ImpliedVolError, ToolError
from core.implied_vol import invert_bs, iv_corrections, surface
from core.mc_oracle import convergence_study, min_steps, simulate_price
from core.model_spec import MCModelSpec
from core.report_exporter import ReportExporter
from core.synthetic import (
    DEFAULT_MATURITIES_DAYS,
    DEFAULT_STRIKES_REL,
    gen_synthetic,
    synthetic_spreads,
    write_chain_csv,
    write_curve_csv,
    write_spreads_csv,
)
from utils.file_utils import FileUtils
from utils.logger import get_logger

logger = get_logger()

SPREAD_MATURITIES = (0.5, 1.0, 2.0, 5.0)


def _curve(cfg: RunConfig) -> DiscountCurve:
    return load_curve(cfg.curve) if cfg.curve else DiscountCurve.flat(cfg.rate)


def _params(cfg: RunConfig) -> ApproxParams:
    """--params 给出的 JSON 参数记录，缺省时取示例参数"""
    if cfg.params:
        data = FileUtils.read_json_file(cfg.params)
        return ApproxParams.from_dict(data.get("params", data))
    if cfg.model == "all":
        raise DomainError("该命令需要单个模型族")
    return sample_params(ModelKind.from_label(cfg.model))


def _avg_var(cfg: RunConfig, prices, date: str) -> Optional[float]:
    """σ̄² 优先取 --avg-var，其次由截至报价日的收盘价估计"""
    if cfg.avg_var is not None:
        return cfg.avg_var
    if prices is None:
        return None
    closes = closes_up_to(prices, date)
    try:
        avg_var = historical_vol(closes)
    except DomainError as e:
        raise DomainError(f"{date} 无法由收盘价估计平均方差: {e}") from e
    logger.debug(f"{date} 历史方差 σ̄²={avg_var:.6g}（{closes.size} 个收盘价）")
    return avg_var


def _chains(cfg: RunConfig, curve: DiscountCurve) -> List[OptionChain]:
    panel = load_chain(cfg.chain)
    prices = load_prices(cfg.prices) if cfg.prices else None
    chains = []
    for date in sorted(panel):
        grid = panel[date]
        chain = build_otm_chain(
            grid.call_iv,
            grid.put_iv,
            grid.strikes,
            grid.maturities_days,
            cfg.spot,
            curve,
            date,
            _avg_var(cfg, prices, date),
        )
        chains.append(chain.filter_maturities(cfg.maturities))
    return chains


def _exact_iv(call_value: float, spot: float, strike: float, B: float, tau: float) -> Optional[float]:
    """近似看涨价的精确反解隐含波动率，价格越出无套利界时为 None"""
    try:
        return invert_bs(call_value, QuoteContext(spot, strike, B, tau))
    except ImpliedVolError as e:
        logger.warning(f"行权价 {strike} 的近似价格无法反解: {e}")
        return None


def cmd_price(cfg: RunConfig) -> Dict[str, Any]:
    """输出近似看涨/看跌价格、质量标志与隐含波动率展开"""
    params = _params(cfg)
    curve = _curve(cfg)
    strikes = np.asarray(cfg.strikes or [cfg.spot], dtype=float)
    ctx = QuoteContext(cfg.spot, strikes, curve.discount(cfg.tau), cfg.tau)

    call = price_call(params, ctx)
    put = price_put(params, ctx)
    expansion = iv_corrections(params, ctx)
    B = float(ctx.B_tT)
    rows = []
    for i, K in enumerate(strikes):
        rows.append(
            {
                "strike": float(K),
                "call": float(np.atleast_1d(call.value)[i]),
                "call_ok": bool(np.atleast_1d(call.arbitrage_ok)[i]),
                "put": float(np.atleast_1d(put.value)[i]),
                "put_ok": bool(np.atleast_1d(put.arbitrage_ok)[i]),
                "i0": float(np.atleast_1d(expansion.i0)[i]),
                "corr_eps": float(np.atleast_1d(expansion.corr_eps)[i]),
                "corr_delta": float(np.atleast_1d(expansion.corr_delta)[i]),
                "iv_total": float(np.atleast_1d(expansion.total)[i]),
                "iv_exact": _exact_iv(float(np.atleast_1d(call.value)[i]), cfg.spot, float(K), B, cfg.tau),
            }
        )
    record = {"params": params.to_dict(), "spot": cfg.spot, "tau": cfg.tau, "quotes": rows}
    path = ReportExporter(cfg.out).export_json(record, "price.json")
    return {"files": [path], "quotes": rows}


def _calibrate_one(cfg: RunConfig, chain: OptionChain, spreads) -> Dict[Any, Any]:
    scheme = cfg.scheme.upper()
    if scheme == "A":
        lambda_bar = spread_to_lambda(shortest_maturity_spread(spreads, chain.quote_date))
        if cfg.model == "all":
            return fit_all_families(chain, "A", lambda_bar)
        kind = ModelKind.from_label(cfg.model)
        return {kind: calibrate_fixed_lambda(chain, lambda_bar, kind)}
    if cfg.model == "all":
        return fit_all_families(chain, "B", lambda_max=cfg.lambda_max)
    kind = ModelKind.from_label(cfg.model)
    return {kind: calibrate_free_lambda(chain, kind, cfg.lambda_max)}


def _iv_fit(chain: OptionChain, result) -> Optional[float]:
    """精确反解下的隐含波动率平方误差和，与 vega 加权价格目标并列报告"""
    try:
        return iv_objective(chain, result)
    except CalibrationError as e:
        logger.warning(f"{chain.quote_date} {result.params.kind.value} 隐含波动率目标无法计算: {e}")
        return None


def cmd_calibrate(cfg: RunConfig) -> Dict[str, Any]:
    """逐日校准并写出拟合 CSV 与 JSON"""
    curve = _curve(cfg)
    chains = _chains(cfg, curve)
    spreads = load_spreads(cfg.spreads) if cfg.spreads else []

    with ThreadPoolExecutor(max_workers=min(4, len(chains))) as executor:
        fitted = list(executor.map(lambda c: _calibrate_one(cfg, c, spreads), chains))

    exporter = ReportExporter(cfg.out)
    summary = []
    for chain, results in zip(chains, fitted):
        exact = {kind: _iv_fit(chain, result) for kind, result in results.items()}
        exporter.export_fit(chain, results, f"{chain.quote_date}_{cfg.scheme.upper()}", exact)
        for kind, result in results.items():
            summary.append(
                {
                    "date": chain.quote_date,
                    "family": kind.value,
                    "lambda_bar": result.params.lambda_bar,
                    "objective": result.objective,
                    "iv_objective": exact[kind],
                }
            )
    return {"files": exporter.written, "results": summary}


def cmd_surface(cfg: RunConfig) -> Dict[str, Any]:
    """写出模型隐含波动率曲面"""
    params = _params(cfg)
    curve = _curve(cfg)
    strikes = np.asarray(cfg.strikes) if cfg.strikes else cfg.spot * np.asarray(DEFAULT_STRIKES_REL)
    days = cfg.maturities or list(DEFAULT_MATURITIES_DAYS)
    grid = surface(params, cfg.spot, strikes, np.asarray(days, dtype=float) / 365.0, curve)
    path = ReportExporter(cfg.out).export_surface(grid, params.kind.value)
    return {"files": [path], "flags": grid.count_flags()}


def cmd_simulate(cfg: RunConfig) -> Dict[str, Any]:
    """在 (ε, δ) 阶梯上做 Monte Carlo 与近似价格对比，写出收敛表；另在模型自身尺度上核对零回收债券"""
    spec = MCModelSpec.from_file(cfg.spec)
    strikes = np.asarray(cfg.strikes) if cfg.strikes else spec.x0 * np.array([0.9, 1.0, 1.1])
    table = convergence_study(
        spec,
        cfg.eps or [spec.eps],
        cfg.delta or [spec.delta],
        strikes,
        cfg.tau,
        cfg.paths,
        cfg.seed,
        cfg.steps,
    )
    exporter = ReportExporter(cfg.out)
    exporter.export_table(table, "convergence.csv")

    steps = cfg.steps or min_steps(spec, cfg.tau)
    estimate = simulate_price(spec, "bond", cfg.tau, steps, cfg.paths, cfg.seed)
    approx = float(bhat(effective_bond_params(effective_params(spec)), np.exp(-spec.r * cfg.tau), cfg.tau))
    bond = {
        "eps": spec.eps,
        "delta": spec.delta,
        "tau": cfg.tau,
        "mc": estimate.mean,
        "std_error": estimate.std_error,
        "approx": approx,
        "n_paths": estimate.n_paths,
        "n_steps": estimate.n_steps,
    }
    exporter.export_json(bond, "bond_check.json")
    return {"files": exporter.written, "rows": table.to_dict(orient="records"), "bond": bond}


def cmd_spread_series(cfg: RunConfig) -> Dict[str, Any]:
    """多日方案 B 校准，输出拟合 λ̄ 与最短期债券利差"""
    if cfg.model == "all":
        raise DomainError("spread-series 需要单个模型族")
    kind = ModelKind.from_label(cfg.model)
    curve = _curve(cfg)
    chains = _chains(cfg, curve)
    spreads = load_spreads(cfg.spreads) if cfg.spreads else []

    with ThreadPoolExecutor(max_workers=min(4, len(chains))) as executor:
        results = list(executor.map(lambda c: calibrate_free_lambda(c, kind, cfg.lambda_max), chains))

    rows = []
    for chain, result in zip(chains, results):
        try:
            bond_spread = shortest_maturity_spread(spreads, chain.quote_date).spread
        except DomainError:
            bond_spread = float("nan")
        rows.append({"date": chain.quote_date, "fitted_lambda": result.params.lambda_bar, "bond_spread": bond_spread})
    path = ReportExporter(cfg.out).export_spread_series(rows, kind.value)
    return {"files": [path], "rows": rows}


def cmd_synth(cfg: RunConfig) -> Dict[str, Any]:
    """生成合成期权面板、曲线与利差文件"""
    curve = _curve(cfg)
    out = FileUtils.ensure_directory(cfg.out)
    days = cfg.maturities or list(DEFAULT_MATURITIES_DAYS)
    strikes_rel = (np.asarray(cfg.strikes) / cfg.spot) if cfg.strikes else DEFAULT_STRIKES_REL

    if cfg.spec:
        spec = MCModelSpec.from_file(cfg.spec)
        if cfg.eps or cfg.delta:
            spec = spec.with_scales((cfg.eps or [spec.eps])[0], (cfg.delta or [spec.delta])[0])
        source = spec
        params = effective_params(spec).params
        curve = DiscountCurve.flat(spec.r)
    else:
        source = params = _params(cfg)

    panel = gen_synthetic(
        source, strikes_rel, days, cfg.spot, curve, cfg.noise, cfg.seed, cfg.date, n_paths=cfg.paths
    )
    files = [
        write_chain_csv(panel, Path(out) / "chain.csv"),
        write_curve_csv(curve, Path(out) / "curve.csv"),
        write_spreads_csv(synthetic_spreads(params, SPREAD_MATURITIES, cfg.date), Path(out) / "spreads.csv"),
    ]
    FileUtils.write_json_file(Path(out) / "params.json", {"params": params.to_dict()})
    files.append(Path(out) / "params.json")
    logger.info(f"合成数据已写出: {out}")
    return {"files": files, "dropped": sum(grid.dropped for grid in panel.values())}


COMMANDS = {
    "price": cmd_price,
    "calibrate": cmd_calibrate,
    "surface": cmd_surface,
    "simulate": cmd_simulate,
    "spread-series": cmd_spread_series,
    "synth": cmd_synth,
}


def run_command(name: str, cfg: RunConfig) -> Dict[str, Any]:
    """执行子命令，底层异常统一包装为 ToolError"""
    try:
        handler = COMMANDS[name]
    except KeyError:
        raise ToolError(f"未知的命令: {name}")
    try:
        return handler(cfg)
    except ToolError:
        raise
    except (ValueError, OSError) as e:
        raise ToolError(f"{name} 执行失败: {e}") from e
