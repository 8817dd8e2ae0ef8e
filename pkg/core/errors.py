#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
异常定义模块
定价、反解、模拟、校准和数据加载使用的异常层级
"""

from typing import List, Optional


class ToolError(Exception):
    """工具根异常"""


class DomainError(ToolError, ValueError):
    """定价输入越界"""


class ImpliedVolError(ToolError):
    """隐含波动率反解失败"""

    def __init__(self, message: str, bound: str, price: float, limit: float):
        super().__init__(message)
        self.bound = bound
        self.price = price
        self.limit = limit


class CorrelationError(ToolError):
    """相关矩阵非半正定"""

    def __init__(self, message: str, minor: int):
        super().__init__(message)
        self.minor = minor


class QuadratureError(ToolError):
    """自适应积分未收敛"""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


class SimulationConfigError(ToolError):
    """Monte Carlo 配置错误"""


class CalibrationError(ToolError):
    """校准失败"""

    def __init__(self, message: str, quote_index: Optional[int] = None):
        super().__init__(message)
        self.quote_index = quote_index


class DataFormatError(ToolError):
    """数据文件格式错误"""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None):
        location = f"{path}:{line}" if line is not None else path
        super().__init__(f"{location}: {message}" if location else message)
        self.path = path
        self.line = line


class ConfigError(ToolError):
    """运行配置校验失败"""

    def __init__(self, errors: List[str]):
        super().__init__("配置无效: " + "; ".join(errors))
        self.errors = list(errors)
