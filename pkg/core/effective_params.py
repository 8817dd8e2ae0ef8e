#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
有效参数模块
由具体的五因子模型函数计算 7 参数近似的 λ̄、σ̄² 与六个 V 系数

快因子 Y ~ N(m, v²)、Q ~ N(m̃, ṽ²) 的不变分布下求平均；
泊松方程 (m − y)φ' + v²φ'' = h − ⟨h⟩ 的导数有闭式
    φ'(y) = (1/(v²ψ(y))) ∫_{−∞}^{y} (h(s) − ⟨h⟩) ψ(s) ds
因而 ⟨k φ'⟩ = (1/v²) ∫ k(y) F(y) dy，F 为上式中的积分。
"""

from dataclasses import dataclass, field
from typing import Callable, Dict

import numpy as np
from scipy.integrate import quad, simpson, solve_bvp
from scipy.stats import norm

from core.approx_pricer import ApproxParams, ModelKind
from core.bs_core import norm_pdf
from core.errors import DomainError, QuadratureError
from core.model_spec import MCModelSpec
from utils.logger import get_logger

logger = get_logger()

QUAD_RTOL = 1e-10
QUAD_ATOL = 1e-13
# 达不到该精度视为不收敛
QUAD_FAIL_RTOL = 1e-7
# 高斯积分截断在 m ± 12v
_HALF_WIDTH = 12.0

CONVENTIONS = ("displayed", "consistent")


def _density(y, m, v):
    return norm_pdf((y - m) / v) / v


@dataclass(frozen=True)
class EffectiveParams:
    """7 参数近似参数与积分诊断"""

    params: ApproxParams
    avg_var: float
    avg_f: float
    avg_sigma: float
    avg_var_z: float
    avg_f_u: float
    brackets: Dict[str, float] = field(default_factory=dict)
    quad_errors: Dict[str, float] = field(default_factory=dict)
    convention: str = "displayed"


class _Quadrature:
    """带误差记录的 quad 包装"""

    def __init__(self):
        self.errors: Dict[str, float] = {}

    def __call__(self, fn: Callable, a: float, b: float, name: str = "") -> float:
        result = quad(fn, a, b, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=200, full_output=1)
        value, abserr = result[0], result[1]
        if len(result) > 3 and abserr > max(QUAD_FAIL_RTOL * abs(value), 1e3 * QUAD_ATOL):
            raise QuadratureError(f"积分未收敛 {name}: {result[3]}", abserr)
        if name:
            self.errors[name] = self.errors.get(name, 0.0) + abserr
        return value


def _gauss_mean(q: _Quadrature, fn: Callable, m: float, v: float, name: str = "") -> float:
    """∫ fn(y) ψ(y) dy，ψ 为 N(m, v²) 密度"""
    return q(lambda y: fn(y) * _density(y, m, v), m - _HALF_WIDTH * v, m + _HALF_WIDTH * v, name)


def poisson_bracket(q: _Quadrature, k: Callable, h: Callable, m: float, v: float, name: str = "") -> float:
    """⟨k φ'⟩，φ 解 L0 φ = h − ⟨h⟩"""
    lo, hi = m - _HALF_WIDTH * v, m + _HALF_WIDTH * v
    mean = _gauss_mean(q, h, m, v)

    def centered(s):
        return (h(s) - mean) * _density(s, m, v)

    def cumulative(y):
        # 右半边从上端积分，减少抵消
        if y <= m:
            return q(centered, lo, y)
        return -q(centered, y, hi)

    return q(lambda y: k(y) * cumulative(y), lo, hi, name) / (v * v)


def effective_params(spec: MCModelSpec, convention: str = "displayed") -> EffectiveParams:
    """
    计算有效参数
    convention="consistent" 时 V1δ 取展示值的一半
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"未知的约定: {convention}（可选 {'/'.join(CONVENTIONS)}）")

    q = _Quadrature()
    z0, u0 = spec.z0, spec.u0
    m, v, mt, vt = spec.m, spec.v, spec.m_tilde, spec.v_tilde

    def sigma(y):
        return spec.sigma(y, z0)

    def sigma_sq(y):
        return spec.sigma(y, z0) ** 2

    def f(qv):
        return spec.f(qv, u0)

    avg_var = _gauss_mean(q, sigma_sq, m, v, "avg_var")
    avg_sigma = _gauss_mean(q, sigma, m, v, "avg_sigma")
    avg_f = _gauss_mean(q, f, mt, vt, "avg_f")
    avg_var_z = _gauss_mean(q, lambda y: 2.0 * spec.sigma(y, z0) * spec.sigma.derivative(y, z0), m, v, "avg_var_z")
    avg_f_u = _gauss_mean(q, lambda qv: spec.f.derivative(qv, u0), mt, vt, "avg_f_u")

    def one(_):
        return 1.0

    if spec.sigma.is_constant:
        sigma_phi_y = lambda_phi_y = 0.0
    else:
        sigma_phi_y = poisson_bracket(q, sigma, sigma_sq, m, v, "sigma_phi_y")
        lambda_phi_y = spec.Lambda * poisson_bracket(q, one, sigma_sq, m, v, "Lambda_phi_y")
    if spec.f.is_constant:
        lambda_t_phit_q = 0.0
    else:
        lambda_t_phit_q = spec.Lambda_tilde * poisson_bracket(q, one, f, mt, vt, "Lambda_tilde_phi_tilde_q")

    # φ 只依赖 y、φ̃ 只依赖 q，交叉项为 0
    sigma_phit_y = lambda_phit_y = lambda_t_phi_q = 0.0

    se, sd = np.sqrt(spec.eps), np.sqrt(spec.delta)
    beta, rho1, rho2 = spec.beta, spec.rho1, spec.rho2
    v1e = np.sqrt(spec.eps / 2.0) * v * rho1 * sigma_phi_y
    v2e = np.sqrt(2.0) * se * (
        beta * v * rho1 * sigma_phi_y + v * rho1 * sigma_phit_y - v * lambda_phi_y / 2.0 - vt * lambda_t_phi_q / 2.0
    )
    v3e = -np.sqrt(2.0) * se * (
        v * lambda_phi_y * beta + v * lambda_phit_y + vt * lambda_t_phi_q * beta + vt * lambda_t_phit_q
    )
    v1d = 0.5 * sd * rho2 * avg_sigma * spec.g * avg_var_z
    v2d = 0.5 * (sd * rho2 * avg_sigma * spec.g * avg_var_z * beta - sd * spec.g * spec.Gamma * avg_var_z / 2.0)
    v3d = 0.5 * (-sd * spec.g * spec.Gamma * avg_var_z * beta - sd * avg_f_u * spec.g_tilde * spec.Gamma_tilde)
    if convention == "consistent":
        v1d *= 0.5

    lambda_bar = beta * avg_var + avg_f
    params = ApproxParams(
        ModelKind.SEVEN_PARAM,
        lambda_bar,
        avg_var,
        (float(v1e), float(v2e), float(v3e)),
        (float(v1d), float(v2d), float(v3d)),
    )
    brackets = {
        "sigma_phi_y": sigma_phi_y,
        "sigma_phi_tilde_y": sigma_phit_y,
        "Lambda_phi_y": lambda_phi_y,
        "Lambda_phi_tilde_y": lambda_phit_y,
        "Lambda_tilde_phi_q": lambda_t_phi_q,
        "Lambda_tilde_phi_tilde_q": lambda_t_phit_q,
    }
    logger.debug(f"有效参数: λ̄={lambda_bar:.6g} σ̄²={avg_var:.6g} V={params.v_vector.tolist()}")
    return EffectiveParams(
        params, avg_var, avg_f, avg_sigma, avg_var_z, avg_f_u, brackets, dict(q.errors), convention
    )


@dataclass(frozen=True)
class PoissonSolution:
    """边值问题解出的 φ' 与平均值"""

    grid: np.ndarray
    derivative: np.ndarray
    mean: float
    m: float
    v: float

    def bracket(self, k: Callable) -> float:
        """⟨k φ'⟩，在解网格上用 Simpson 公式积分"""
        weights = norm.pdf(self.grid, self.m, self.v)
        return float(simpson(k(self.grid) * self.derivative * weights, x=self.grid))


def poisson_derivative_ode(
    h: Callable, m: float, v: float, half_width: float = 8.0, n_nodes: int = 4001
) -> PoissonSolution:
    """
    用边值问题独立求解 v² p' + (m − y) p = h(y) − c，p = φ'
    c 作为未知参数，边界条件 p(m ± half_width·v) = 0
    """
    if not v > 0:
        raise DomainError(f"v 必须为正: {v}")
    lo, hi = m - half_width * v, m + half_width * v
    mesh = np.linspace(lo, hi, n_nodes)

    def fun(y, p, c):
        return ((np.broadcast_to(h(y), y.shape) - c[0] - (m - y) * p[0]) / (v * v))[None, :]

    def bc(pa, pb, c):
        return np.array([pa[0], pb[0]])

    guess = float(np.mean(np.broadcast_to(h(mesh), mesh.shape)))
    sol = solve_bvp(fun, bc, mesh, np.zeros((1, n_nodes)), p=[guess], tol=1e-8, max_nodes=200000)
    if not sol.success:
        raise QuadratureError(f"边值问题求解失败: {sol.message}", float(np.max(sol.rms_residuals)))

    fine = np.linspace(lo, hi, 8 * n_nodes + 1)
    return PoissonSolution(fine, sol.sol(fine)[0], float(sol.p[0]), m, v)
