# -*- coding: utf-8 -*-
"""
测试公共配置
hypothesis 配置档、日志目录与常用夹具
"""

import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.approx_pricer import ModelKind, sample_params  # noqa: E402
from core.data_loader import DiscountCurve  # noqa: E402
from utils.logger import get_logger  # noqa: E402

settings.register_profile("ci", max_examples=300, deadline=None)
settings.register_profile("fast", max_examples=40, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture(autouse=True, scope="session")
def _log_to_tmp(tmp_path_factory):
    """测试期间日志写到临时目录"""
    logger = get_logger()
    logger.set_log_dir(str(tmp_path_factory.mktemp("logs")))
    yield
    logger.close()


@pytest.fixture
def flat_curve():
    return DiscountCurve.flat(0.04)


@pytest.fixture
def seven_params():
    return sample_params(ModelKind.SEVEN_PARAM)


@pytest.fixture
def strike_ladder():
    return np.round(100.0 * np.linspace(0.7, 1.3, 13), 4)
