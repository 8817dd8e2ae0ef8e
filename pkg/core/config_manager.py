#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置管理器模块
管理 config/run_config.json 中的默认运行参数，命令行参数覆盖配置文件
"""

import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from core.approx_pricer import ModelKind
from core.errors import ConfigError, DomainError
from utils.file_utils import FileUtils
from utils.logger import get_logger

logger = get_logger()

CONFIG_VERSION = "1.0.0"


@dataclass(frozen=True)
class RunConfig:
    """一次命令运行的全部参数"""

    model: str = "7p"
    scheme: str = "B"
    maturities: Optional[List[int]] = None
    chain: Optional[str] = None
    curve: Optional[str] = None
    spreads: Optional[str] = None
    prices: Optional[str] = None
    spec: Optional[str] = None
    params: Optional[str] = None
    out: str = "exports"
    seed: int = 0
    eps: Optional[List[float]] = None
    delta: Optional[List[float]] = None
    paths: int = 20000
    steps: Optional[int] = None
    lambda_max: float = 0.5
    spot: float = 100.0
    avg_var: Optional[float] = None
    rate: float = 0.0
    strikes: Optional[List[float]] = None
    tau: float = 1.0
    noise: float = 0.0
    date: str = "2006-01-03"

    def merged(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """用非 None 的覆盖值生成新配置"""
        known = {f.name for f in fields(self)}
        changes = {k: v for k, v in overrides.items() if k in known and v is not None}
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def validate_run_config(cfg: RunConfig, command: Optional[str] = None) -> List[str]:
    """验证运行配置，返回错误列表"""
    errors = []

    if cfg.model != "all":
        try:
            ModelKind.from_label(cfg.model)
        except DomainError as e:
            errors.append(str(e))
    if str(cfg.scheme).upper() not in ("A", "B"):
        errors.append(f"方案必须是 A 或 B: {cfg.scheme}")

    for name in ("chain", "curve", "spreads", "prices", "spec", "params"):
        value = getattr(cfg, name)
        if value and not FileUtils.file_exists(value):
            errors.append(f"{name} 文件不存在: {value}")

    if command in ("calibrate", "spread-series") and not cfg.chain:
        errors.append("需要期权面板文件 --chain")
    if command in ("calibrate", "spread-series") and str(cfg.scheme).upper() == "A" and not cfg.spreads:
        errors.append("方案 A 需要利差文件 --spreads")
    if command == "simulate" and not cfg.spec:
        errors.append("需要模型文件 --spec")

    if cfg.maturities is not None and any(int(d) <= 0 for d in cfg.maturities):
        errors.append(f"期限天数必须为正: {cfg.maturities}")
    if cfg.seed < 0:
        errors.append(f"种子不能为负: {cfg.seed}")
    if cfg.paths < 2 or cfg.paths % 2:
        errors.append(f"路径数必须是不小于 2 的偶数: {cfg.paths}")
    if cfg.steps is not None and cfg.steps < 1:
        errors.append(f"步数必须为正: {cfg.steps}")
    for name in ("eps", "delta"):
        values = getattr(cfg, name)
        if values is not None and not all(v > 0 for v in values):
            errors.append(f"{name} 必须为正: {values}")
    if cfg.avg_var is not None and not cfg.avg_var > 0:
        errors.append(f"avg_var 必须为正: {cfg.avg_var}")
    if not cfg.lambda_max > 0:
        errors.append(f"λ_max 必须为正: {cfg.lambda_max}")
    if not cfg.spot > 0:
        errors.append(f"现价必须为正: {cfg.spot}")
    if not cfg.tau > 0:
        errors.append(f"剩余期限必须为正: {cfg.tau}")
    if cfg.noise < 0:
        errors.append(f"噪声水平不能为负: {cfg.noise}")
    return errors


class ConfigManager:
    """运行配置管理器"""

    def __init__(self, config_dir: str = "config"):
        """初始化配置管理器"""
        self.config_file = Path(config_dir) / "run_config.json"

    def _ensure_config_exists(self):
        """确保配置文件存在"""
        try:
            if not self.config_file.exists():
                self._create_default_config()
        except Exception as e:
            logger.warning(f"确保配置文件存在失败: {e}")

    def _create_default_config(self):
        """创建默认配置"""
        self._save(RunConfig().to_dict())

    def _save(self, run: Dict[str, Any]):
        config = {
            "run": run,
            "version": CONFIG_VERSION,
            "last_updated": time.strftime("%Y-%m-%dT%H:%M:%SZ"),
        }
        FileUtils.write_json_file(self.config_file, config)

    def load_config(self) -> RunConfig:
        """加载配置文件，缺失时写入默认配置"""
        self._ensure_config_exists()
        data = FileUtils.read_json_file(self.config_file).get("run", {})
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            logger.warning(f"忽略未知的配置项: {', '.join(unknown)}")
        try:
            return RunConfig().merged({k: v for k, v in data.items() if k in known})
        except TypeError as e:
            raise ConfigError([f"加载配置文件失败: {e}"]) from e

    def save_config(self, cfg: RunConfig):
        """保存配置文件"""
        errors = validate_run_config(cfg)
        if errors:
            raise ConfigError(errors)
        self._save(cfg.to_dict())

    def resolve(self, overrides: Mapping[str, Any], command: Optional[str] = None) -> RunConfig:
        """配置文件 < 命令行，校验失败抛 ConfigError"""
        cfg = self.load_config().merged(overrides)
        errors = validate_run_config(cfg, command)
        if errors:
            raise ConfigError(errors)
        return cfg
