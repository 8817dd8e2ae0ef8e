#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
文件工具模块
提供目录、JSON 与 CSV 文件读写的工具函数
"""

import json
import re
from pathlib import Path
from typing import Any, Dict, Union

import pandas as pd

from core.errors import DataFormatError, ToolError

# 浮点数统一以 12 位有效数字写出
FLOAT_FORMAT = "%.12g"


class FileUtils:
    """文件工具类"""

    @staticmethod
    def ensure_directory(path: Union[str, Path]) -> Path:
        """确保目录存在"""
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        return path

    @staticmethod
    def read_json_file(file_path: Union[str, Path]) -> Dict[str, Any]:
        """读取JSON文件，文件不存在时返回空字典"""
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError:
            return {}
        except json.JSONDecodeError as e:
            raise DataFormatError(f"JSON文件格式错误: {e.msg}", str(file_path), e.lineno)
        except OSError as e:
            raise ToolError(f"读取文件失败: {e}") from e

    @staticmethod
    def write_json_file(file_path: Union[str, Path], data: Dict[str, Any], indent: int = 2) -> None:
        """写入JSON文件"""
        try:
            FileUtils.ensure_directory(Path(file_path).parent)
            with open(file_path, "w", encoding="utf-8") as f:
                json.dump(data, f, ensure_ascii=False, indent=indent, default=_json_default)
        except (OSError, TypeError) as e:
            raise ToolError(f"写入文件失败: {e}") from e

    @staticmethod
    def write_csv_file(file_path: Union[str, Path], frame: pd.DataFrame) -> Path:
        """写入CSV文件，浮点数保留 12 位有效数字"""
        path = Path(file_path)
        try:
            FileUtils.ensure_directory(path.parent)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        except OSError as e:
            raise ToolError(f"写入文件失败: {e}") from e
        return path

    @staticmethod
    def file_exists(file_path: Union[str, Path]) -> bool:
        """检查文件是否存在"""
        return Path(file_path).is_file()

    @staticmethod
    def sanitize_filename(filename: str) -> str:
        """清理文件名，移除非法字符"""
        sanitized = re.sub(r'[<>:"/\\|?*\s]', "_", filename)
        sanitized = re.sub(r"[\x00-\x1f\x7f-\x9f]", "", sanitized).strip(".")
        return sanitized or "unnamed"


def _json_default(value):
    """numpy 标量与数组转成 JSON 可写类型"""
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"无法序列化的类型: {type(value).__name__}")
