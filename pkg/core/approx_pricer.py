#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
近似定价模块
由 C00 与希腊块构造 7 参数、5 参数、3 参数和纯随机波动率模型的近似期权价格

    C̃ = C00 − τ(V1ε G1 + V2ε G2 + V3ε G3) + τ²(V1δ G1 + V2δ G2 + V3δ G3)

给定 (ctx, λ̄, σ̄²) 时价格对六个 V 系数是仿射的，校准直接利用这一点。
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from core.bs_core import ArrayLike, LevelParams, QuoteContext, _out, c00_call, greek_blocks
from core.errors import DomainError

# 六维 V 向量的槽位顺序: [V1ε, V2ε, V3ε, V1δ, V2δ, V3δ]
V_LABELS = ("v1_eps", "v2_eps", "v3_eps", "v1_delta", "v2_delta", "v3_delta")


class ModelKind(str, Enum):
    """模型族"""

    SEVEN_PARAM = "7p"
    FIVE_PARAM = "5p"
    THREE_PARAM = "3p"
    SV_ONLY = "sv"

    @classmethod
    def from_label(cls, label) -> "ModelKind":
        if isinstance(label, cls):
            return label
        try:
            return cls(str(label).strip().lower())
        except ValueError:
            raise DomainError(f"未知的模型族: {label}（可选 7p/5p/3p/sv）")

    @property
    def free_slots(self) -> Tuple[int, ...]:
        """该族自由 V 系数在六维向量中的下标"""
        if self is ModelKind.SEVEN_PARAM:
            return (0, 1, 2, 3, 4, 5)
        if self is ModelKind.THREE_PARAM:
            return (1, 4)
        return (0, 1, 3, 4)

    @property
    def lambda_is_zero(self) -> bool:
        return self is ModelKind.SV_ONLY

    @property
    def n_free(self) -> int:
        """自由标量个数（含 λ̄）"""
        return len(self.free_slots) + (0 if self.lambda_is_zero else 1)


@dataclass(frozen=True)
class ApproxParams:
    """某一模型族某一日的可校准组参数"""

    kind: ModelKind
    lambda_bar: float
    avg_var: float
    v_eps: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    v_delta: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.from_label(self.kind))
        object.__setattr__(self, "v_eps", tuple(float(v) for v in self.v_eps))
        object.__setattr__(self, "v_delta", tuple(float(v) for v in self.v_delta))
        object.__setattr__(self, "lambda_bar", float(self.lambda_bar))
        object.__setattr__(self, "avg_var", float(self.avg_var))
        if len(self.v_eps) != 3 or len(self.v_delta) != 3:
            raise DomainError("v_eps 与 v_delta 必须各有 3 个分量")

        self.level.validate()
        vector = self.v_vector
        if not np.all(np.isfinite(vector)):
            raise DomainError(f"V 系数必须有限: {vector}")
        fixed = [i for i in range(6) if i not in self.kind.free_slots]
        if any(vector[i] != 0.0 for i in fixed):
            names = ", ".join(V_LABELS[i] for i in fixed)
            raise DomainError(f"{self.kind.value} 模型要求以下系数为 0: {names}")
        if self.kind.lambda_is_zero and self.lambda_bar != 0.0:
            raise DomainError("sv 模型要求 λ̄ = 0")

    @property
    def level(self) -> LevelParams:
        return LevelParams(avg_var=self.avg_var, lambda_bar=self.lambda_bar)

    @property
    def v_vector(self) -> np.ndarray:
        return np.array(self.v_eps + self.v_delta, dtype=float)

    @property
    def free_values(self) -> np.ndarray:
        return self.v_vector[list(self.kind.free_slots)]

    def with_v(self, free_values: Sequence[float]) -> "ApproxParams":
        """按本族的自由槽位写入 V 系数"""
        slots = self.kind.free_slots
        if len(free_values) != len(slots):
            raise DomainError(f"{self.kind.value} 模型需要 {len(slots)} 个 V 系数，收到 {len(free_values)} 个")
        vector = np.zeros(6)
        vector[list(slots)] = np.asarray(free_values, dtype=float)
        return ApproxParams(self.kind, self.lambda_bar, self.avg_var, tuple(vector[:3]), tuple(vector[3:]))

    def restricted_to(self, kind: ModelKind) -> "ApproxParams":
        """把目标族之外的系数置零，得到嵌套族参数"""
        kind = ModelKind.from_label(kind)
        vector = self.v_vector
        keep = np.zeros(6)
        keep[list(kind.free_slots)] = vector[list(kind.free_slots)]
        lambda_bar = 0.0 if kind.lambda_is_zero else self.lambda_bar
        return ApproxParams(kind, lambda_bar, self.avg_var, tuple(keep[:3]), tuple(keep[3:]))

    def replace(self, **changes) -> "ApproxParams":
        data = {
            "kind": self.kind,
            "lambda_bar": self.lambda_bar,
            "avg_var": self.avg_var,
            "v_eps": self.v_eps,
            "v_delta": self.v_delta,
        }
        data.update(changes)
        return ApproxParams(**data)

    def to_dict(self) -> Dict[str, Any]:
        data = {"kind": self.kind.value, "lambda_bar": self.lambda_bar, "avg_var": self.avg_var}
        data.update({name: value for name, value in zip(V_LABELS, self.v_vector.tolist())})
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ApproxParams":
        try:
            vector = [float(data.get(name, 0.0)) for name in V_LABELS]
            return cls(
                kind=ModelKind.from_label(data["kind"]),
                lambda_bar=float(data.get("lambda_bar", 0.0)),
                avg_var=float(data["avg_var"]),
                v_eps=tuple(vector[:3]),
                v_delta=tuple(vector[3:]),
            )
        except KeyError as e:
            raise DomainError(f"参数记录缺少字段: {e}")


@dataclass(frozen=True)
class PriceQuality:
    """近似价格及无套利界检查结果"""

    value: ArrayLike
    arbitrage_ok: Any = field(default=True)


def correction_basis(ctx: QuoteContext, lv: LevelParams) -> np.ndarray:
    """
    价格对六个 V 系数的偏导，最后一维按 V_LABELS 排列
    [−τG1, −τG2, −τG3, τ²G1, τ²G2, τ²G3]
    """
    g1, g2, g3 = (np.asarray(g) for g in greek_blocks(ctx, lv))
    tau = np.broadcast_to(np.asarray(ctx.tau, dtype=float), g1.shape)
    blocks = np.stack([g1, g2, g3], axis=-1)
    return np.concatenate([-tau[..., None] * blocks, (tau * tau)[..., None] * blocks], axis=-1)


def _call_value(params: ApproxParams, ctx: QuoteContext) -> np.ndarray:
    ctx.validate()
    base = np.asarray(c00_call(ctx, params.level))
    return base + correction_basis(ctx, params.level) @ params.v_vector


def price_call(params: ApproxParams, ctx: QuoteContext) -> PriceQuality:
    """近似看涨价格，越出 [max(x − K B, 0), x] 时质量标志为 False（不裁剪）"""
    value = _call_value(params, ctx)
    x, K, B, _ = ctx.arrays()
    lower = np.maximum(x - K * B, 0.0)
    ok = (value >= lower) & (value <= x)
    return PriceQuality(_out(value), ok if np.ndim(ok) else bool(ok))


def price_put(params: ApproxParams, ctx: QuoteContext) -> PriceQuality:
    """近似看跌价格，由平价关系 C̃ − P̃ = x − B K 给出"""
    x, K, B, _ = ctx.arrays()
    value = _call_value(params, ctx) - x + K * B
    lower = np.maximum(K * B - x, 0.0)
    ok = (value >= lower) & (value <= K * B)
    return PriceQuality(_out(value), ok if np.ndim(ok) else bool(ok))


def price_otm(params: ApproxParams, ctx: QuoteContext, is_put: ArrayLike) -> np.ndarray:
    """按报价方向逐个给出虚值期权的近似价格"""
    call = _call_value(params, ctx)
    x, K, B, _ = ctx.arrays()
    put = call - x + K * B
    return np.where(np.asarray(is_put, dtype=bool), put, call)


def _same(a, b, scale) -> bool:
    return bool(np.all(np.abs(np.asarray(a) - np.asarray(b)) <= 1e-12 * np.maximum(np.abs(b), scale)))


def nesting_check(params7: ApproxParams, ctx: QuoteContext) -> bool:
    """检查 7p → 5p → 3p 以及 5p → sv 的嵌套关系在价格上成立"""
    scale = np.asarray(ctx.x, dtype=float)
    vector = params7.v_vector.copy()

    vector[[2, 5]] = 0.0
    seven_no_v3 = params7.replace(kind=ModelKind.SEVEN_PARAM, v_eps=tuple(vector[:3]), v_delta=tuple(vector[3:]))
    five = params7.restricted_to(ModelKind.FIVE_PARAM)
    if not _same(price_call(seven_no_v3, ctx).value, price_call(five, ctx).value, scale):
        return False

    vector[[0, 3]] = 0.0
    five_no_v1 = five.replace(v_eps=tuple(vector[:3]), v_delta=tuple(vector[3:]))
    three = five.restricted_to(ModelKind.THREE_PARAM)
    if not _same(price_call(five_no_v1, ctx).value, price_call(three, ctx).value, scale):
        return False

    five_zero_lambda = five.replace(lambda_bar=0.0)
    sv = five.restricted_to(ModelKind.SV_ONLY)
    return _same(price_call(five_zero_lambda, ctx).value, price_call(sv, ctx).value, scale)


def sample_params(kind: ModelKind, lambda_bar: Optional[float] = None) -> ApproxParams:
    """各模型族的典型参数量级（σ̄=0.2，λ̄=0.02，利率由曲线给出）"""
    kind = ModelKind.from_label(kind)
    if kind is ModelKind.THREE_PARAM:
        v_eps, v_delta = (0.0, 0.0015, 0.0), (0.0, 0.001, 0.0)
    elif kind is ModelKind.SEVEN_PARAM:
        v_eps, v_delta = (-0.0015, 0.001, -0.005), (-0.001, -0.001, -0.06)
    else:
        v_eps, v_delta = (-0.0015, 0.001, 0.0), (-0.001, -0.001, 0.0)
    lam = 0.0 if kind.lambda_is_zero else (0.02 if lambda_bar is None else lambda_bar)
    return ApproxParams(kind, lam, 0.04, v_eps, v_delta)


def iter_kinds() -> Iterable[ModelKind]:
    return (ModelKind.SEVEN_PARAM, ModelKind.FIVE_PARAM, ModelKind.THREE_PARAM, ModelKind.SV_ONLY)
