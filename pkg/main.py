#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DefaultableVolTool - 可违约股票期权定价与校准工具
主程序入口
"""

import argparse
import os
import sys
from typing import List, Optional

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.commands import COMMANDS, run_command
from core.config_manager import ConfigManager
from core.errors import ToolError
from utils.logger import get_logger

logger = get_logger()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="main.py", description="可违约股票期权的多尺度近似定价、校准与模拟")
    parser.add_argument("command", choices=sorted(COMMANDS), help="子命令")
    parser.add_argument("--model", help="模型族 7p/5p/3p/sv，或 all（calibrate）")
    parser.add_argument("--scheme", choices=["A", "B", "a", "b"], help="A: λ̄ 取最短期利差；B: λ̄ 由期权拟合")
    parser.add_argument("--chain", help="期权面板 CSV")
    parser.add_argument("--curve", help="零利率曲线 CSV")
    parser.add_argument("--spreads", help="债券利差 CSV")
    parser.add_argument("--prices", help="股票收盘价 CSV（date,close），用于估计 σ̄²")
    parser.add_argument("--maturities", type=int, nargs="+", help="只使用这些期限（天）")
    parser.add_argument("--out", help="输出目录")
    parser.add_argument("--seed", type=int, help="随机种子")
    parser.add_argument("--eps", type=float, nargs="+", help="ε（simulate 时为递减阶梯）")
    parser.add_argument("--delta", type=float, nargs="+", help="δ（simulate 时为递减阶梯）")
    parser.add_argument("--paths", type=int, help="Monte Carlo 路径数（偶数）")
    parser.add_argument("--steps", type=int, help="时间步数")
    parser.add_argument("--spec", help="五因子模型文件（key = value）")
    parser.add_argument("--params", help="近似参数 JSON")
    parser.add_argument("--spot", type=float, help="现价")
    parser.add_argument("--strikes", type=float, nargs="+", help="行权价")
    parser.add_argument("--tau", type=float, help="剩余期限（年）")
    parser.add_argument("--avg-var", dest="avg_var", type=float, help="平均方差 σ̄²")
    parser.add_argument("--rate", type=float, help="无曲线文件时的常数利率")
    parser.add_argument("--lambda-max", dest="lambda_max", type=float, help="方案 B 的 λ̄ 上界")
    parser.add_argument("--noise", type=float, help="合成数据的乘性隐含波动率噪声")
    parser.add_argument("--date", help="合成数据的报价日期")
    parser.add_argument("--config-dir", dest="config_dir", default="config", help="配置目录")
    parser.add_argument("--verbose", action="store_true", help="输出调试日志到标准错误")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主函数，返回退出码"""
    args = _build_parser().parse_args(argv)
    if args.verbose:
        logger.set_debug_mode(True)
        logger.set_console_echo(True)

    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config_dir", "verbose")}
    try:
        cfg = ConfigManager(args.config_dir).resolve(overrides, args.command)
        logger.log_function_call(args.command, {k: v for k, v in overrides.items() if v is not None})
        summary = run_command(args.command, cfg)
    except ToolError as e:
        logger.error(f"{args.command} 失败: {e}")
        print(f"错误: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("程序被用户中断", file=sys.stderr)
        return 130

    for path in summary.get("files", []):
        print(f"已写出: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
