#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
日志系统模块
按日追加的文件日志；默认只记录警告与错误，调试模式记录全部级别
"""

import datetime
import sys
import threading
from pathlib import Path
from typing import Any, Dict, Optional, TextIO

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class Logger:
    """线程安全的文件日志记录器，首次写入时才创建日志文件"""

    def __init__(self, log_dir: str = "logs"):
        self.log_dir = Path(log_dir)
        self.debug_mode = False
        self.console_echo = False
        self.log_file: Optional[TextIO] = None
        self.lock = threading.Lock()

    def _open(self):
        """打开 vol_YYYYMMDD.log 并写入会话分隔行"""
        now = datetime.datetime.now()
        try:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            self.log_file = open(self.log_dir / f"vol_{now:%Y%m%d}.log", "a", encoding="utf-8")
            self.log_file.write(f"\n{'-' * 20} 会话开始 {now:%Y-%m-%d %H:%M:%S} {'-' * 20}\n")
        except OSError as e:
            self.log_file = None
            print(f"创建日志文件失败: {e}", file=sys.stderr)

    def _close_file(self):
        if self.log_file:
            self.log_file.close()
            self.log_file = None

    def set_log_dir(self, log_dir: str):
        """切换日志目录，下次写入时在新目录创建文件"""
        with self.lock:
            self._close_file()
            self.log_dir = Path(log_dir)

    def set_debug_mode(self, enabled: bool):
        """设置调试模式"""
        self.debug_mode = enabled
        self._log("INFO", f"调试模式: {'开启' if enabled else '关闭'}")

    def set_console_echo(self, enabled: bool):
        """同时输出到标准错误"""
        self.console_echo = enabled

    def enabled_for(self, level: str) -> bool:
        return self.debug_mode or LEVELS.index(level) >= LEVELS.index("WARNING")

    def _log(self, level: str, message: str):
        if not self.enabled_for(level):
            return
        stamp = datetime.datetime.now().strftime("%H:%M:%S.%f")[:-3]
        line = f"{stamp} {level:<7} [{threading.current_thread().name}] {message}\n"
        with self.lock:
            if self.log_file is None:
                self._open()
            try:
                if self.log_file:
                    self.log_file.write(line)
                    self.log_file.flush()
            except OSError as e:
                print(f"写入日志文件失败: {e}", file=sys.stderr)
        if self.console_echo:
            sys.stderr.write(line)

    def debug(self, message: str):
        self._log("DEBUG", message)

    def info(self, message: str):
        self._log("INFO", message)

    def warning(self, message: str):
        self._log("WARNING", message)

    def error(self, message: str):
        self._log("ERROR", message)

    def log_function_call(self, func_name: str, args: Optional[Dict[str, Any]] = None, result: str = "成功"):
        """记录函数调用"""
        args_str = ", ".join(f"{k}={v}" for k, v in args.items()) if args else "无参数"
        self.debug(f"函数调用: {func_name}({args_str}) -> {result}")

    def log_calibration(self, family: str, scheme: str, lambda_bar: float, objective: float):
        """记录一次校准结果"""
        self.info(f"校准: 模型={family} 方案={scheme} λ̄={lambda_bar:.6g} 目标={objective:.6g}")

    def log_simulation(self, payoff: str, n_paths: int, n_steps: int, mean: float, std_error: float):
        """记录一次 Monte Carlo 估计"""
        self.info(f"模拟: 支付={payoff} 路径={n_paths} 步数={n_steps} 均值={mean:.8g} 标准误={std_error:.3g}")

    def close(self):
        """关闭日志记录器"""
        self.info("日志系统关闭")
        with self.lock:
            self._close_file()


# 全局日志实例
logger = Logger()


def get_logger() -> Logger:
    """获取全局日志实例"""
    return logger
