#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
报告导出器模块
把校准、曲面、模拟与利差序列结果写成 CSV 与 JSON 报告
"""

import time
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import numpy as np
import pandas as pd

from core.calibration import CalibrationResult, OptionChain
from core.implied_vol import SurfaceGrid
from utils.file_utils import FileUtils
from utils.logger import get_logger

logger = get_logger()

FIT_COLUMNS = ["family", "maturity_days", "strike", "side", "observed_iv", "model_iv", "residual"]
SPREAD_SERIES_COLUMNS = ["date", "fitted_lambda", "bond_spread"]


class ReportExporter:
    """报告导出器"""

    def __init__(self, out_dir: Union[str, Path] = "exports"):
        """初始化导出器"""
        self.out_dir = Path(out_dir)
        self.written: List[Path] = []

    def _path(self, name: str) -> Path:
        return self.out_dir / FileUtils.sanitize_filename(name)

    def _record(self, path: Path) -> Path:
        self.written.append(path)
        logger.info(f"写出报告: {path}")
        return path

    def fit_frame(self, chain: OptionChain, result: CalibrationResult) -> pd.DataFrame:
        """逐报价的拟合明细"""
        model_ivs = result.model_ivs if result.model_ivs is not None else np.full(len(chain), np.nan)
        return pd.DataFrame(
            {
                "family": result.params.kind.value,
                "maturity_days": [q.maturity_days for q in chain.quotes],
                "strike": chain.column("strike"),
                "side": [q.side for q in chain.quotes],
                "observed_iv": chain.column("observed_iv"),
                "model_iv": model_ivs,
                "residual": result.residuals,
            },
            columns=FIT_COLUMNS,
        )

    def export_fit(
        self,
        chain: OptionChain,
        results: Mapping[Any, CalibrationResult],
        stem: str,
        iv_objectives: Optional[Mapping[Any, Optional[float]]] = None,
    ) -> Dict[str, Path]:
        """写出拟合 CSV（带 family 列）与 JSON 详细记录，iv_objectives 按族附上隐含波动率目标"""
        try:
            frames = [self.fit_frame(chain, result) for result in results.values()]
            csv_path = FileUtils.write_csv_file(self._path(f"{stem}_fit.csv"), pd.concat(frames, ignore_index=True))
            record = {
                "quote_date": chain.quote_date,
                "spot": chain.spot,
                "avg_var": chain.avg_var,
                "n_quotes": len(chain),
                "maturity_days": chain.maturity_days(),
                "results": [
                    dict(result.to_dict(), iv_objective=(iv_objectives or {}).get(kind))
                    for kind, result in results.items()
                ],
                "version": "1.0.0",
                "generated": time.strftime("%Y-%m-%dT%H:%M:%SZ"),
            }
            json_path = self._path(f"{stem}_fit.json")
            FileUtils.write_json_file(json_path, record)
        except Exception as e:
            logger.error(f"导出校准报告失败: {e}")
            raise
        return {"csv": self._record(csv_path), "json": self._record(json_path)}

    def export_surface(self, grid: SurfaceGrid, stem: str) -> Path:
        """写出曲面 CSV（maturity_days, strike, iv, flag）"""
        path = FileUtils.write_csv_file(self._path(f"{stem}_surface.csv"), grid.to_frame())
        return self._record(path)

    def export_table(self, frame: pd.DataFrame, name: str) -> Path:
        """写出任意表格，例如收敛研究表"""
        return self._record(FileUtils.write_csv_file(self._path(name), frame))

    def export_spread_series(self, rows: List[Dict[str, Any]], stem: str) -> Path:
        """写出 (date, fitted_lambda, bond_spread) 序列"""
        frame = pd.DataFrame(rows, columns=SPREAD_SERIES_COLUMNS).sort_values("date", kind="stable")
        return self._record(FileUtils.write_csv_file(self._path(f"{stem}_spread_series.csv"), frame))

    def export_json(self, data: Dict[str, Any], name: str) -> Path:
        path = self._path(name)
        FileUtils.write_json_file(path, data)
        return self._record(path)
