"""
水平集稳定化

- 目标值 T = L* + γ(U*_prev − L*)
- LMP: 在割模型水平集 {f'x + Σπβ ≤ T} 内求离参考点最近的主变量
- 动态 γ: 比较实际改进与期望改进的比值 r 调整 γ
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, model_validator

from backend.lp_backend import LPBackend, SolveStatus
from config import config
from core.exceptions import SolverFailure
from problem.structured_problem import node_view
from .cuts import CutPool
from .master_problem import MasterProblemBuilder

LEVEL_TOL = 1e-6


class StabilisationConfig(BaseModel):
    """稳定化参数"""
    gamma0: float = Field(default_factory=lambda: config.gamma)
    dynamic: bool = False
    omega: float = Field(default_factory=lambda: config.omega, gt=0.0, lt=1.0)
    p_low: float = Field(default_factory=lambda: config.p_low, gt=0.0, lt=1.0)
    p_high: float = Field(default_factory=lambda: config.p_high, gt=0.0, lt=1.0)
    gamma_min: float = Field(default_factory=lambda: config.gamma_min, ge=0.0)
    gamma_max: float = Field(default_factory=lambda: config.gamma_max, le=1.0)

    @model_validator(mode="after")
    def check_ranges(self):
        if not self.p_low < self.p_high:
            raise ValueError(f"p_low ({self.p_low}) 必须小于 p_high ({self.p_high})")
        if not self.gamma_min <= self.gamma_max:
            raise ValueError("gamma 截断区间为空")
        if not self.gamma_min <= self.gamma0 <= self.gamma_max:
            raise ValueError(f"gamma0={self.gamma0} 不在截断区间 [{self.gamma_min}, {self.gamma_max}] 内")
        return self

    @property
    def gamma_clamp(self):
        return self.gamma_min, self.gamma_max

    def clamp(self, gamma: float) -> float:
        return min(max(gamma, self.gamma_min), self.gamma_max)


@dataclass
class TargetState:
    """
    γ 控制器状态

    lbo_prev: 上一外迭代结束时的下界预言机目标估计 L^LBO_{j−1}
    target_prev: 最近一次计算的目标值 T_j（本次更新比值的分母使用它）
    """
    gamma: float
    lbo_prev: Optional[float] = None
    target_prev: Optional[float] = None


@dataclass
class LmpSolution:
    x: np.ndarray
    beta: np.ndarray
    level_value: float
    wall_time: float
    fallback: bool = False


def compute_target(L_star: float, U_star_prev: float, gamma: float) -> float:
    """
    计算水平目标 T = L* + γΔ, Δ = U*_prev − L*

    首次迭代上界为无穷时返回无穷（不施加水平约束）
    """
    if math.isinf(U_star_prev):
        return math.inf
    delta = U_star_prev - L_star
    if delta < 0:
        logger.debug(f"上下界交叉 Δ={delta:.3g}，按 0 处理")
        delta = 0.0
    if gamma == 0.0:
        return L_star
    if gamma == 1.0:
        return L_star + delta if delta == 0.0 else U_star_prev
    return L_star + gamma * delta


def leaves_level_set(L_lbo: float, L_star: float, U_star: float, gamma: float) -> bool:
    """
    查询点的预言机下界是否已高于按当前界重算的目标

    否则下一次 LMP 可能原地返回该点
    """
    target = compute_target(L_star, U_star, gamma)
    if math.isinf(target):
        return True
    return L_lbo > target + LEVEL_TOL * (1.0 + abs(target))


def model_level(builder: MasterProblemBuilder, pools: CutPool, x: np.ndarray) -> float:
    """割模型在 x 处的目标值 f'x + Σπ_i max(β̲, 割值)"""
    problem = builder.problem
    value = float(problem.master.f @ x)
    for node in problem.nodes:
        value += node.pi * pools.model_value(node.id, node_view(x, node))
    return value


def solve_lmp(builder: MasterProblemBuilder, pools: CutPool, x_ref: np.ndarray, target: float,
              backend: LPBackend, x_rmp: Optional[np.ndarray] = None) -> LmpSolution:
    """
    求解水平集主问题

    Args:
        builder: 主问题构造器
        pools: 割池
        x_ref: 参考点
        target: 水平目标 T
        backend: 求解后端
        x_rmp: RMP 解，QP 误报不可行时回退使用

    Returns:
        LmpSolution
    """
    if math.isinf(target):
        x = np.asarray(x_ref, dtype=float).copy()
        return LmpSolution(x=x, beta=np.full(builder.node_count, np.nan),
                           level_value=model_level(builder, pools, x), wall_time=0.0)

    outcome = backend.solve(builder.build_lmp(pools, np.asarray(x_ref, dtype=float), target))
    if outcome.status is SolveStatus.INFEASIBLE:
        if x_rmp is None:
            raise SolverFailure("LMP不可行且无RMP解可回退", status=outcome.status.value)
        logger.warning(f"LMP被判不可行 (T={target:.6f})，回退到RMP解")
        x = np.asarray(x_rmp, dtype=float).copy()
        return LmpSolution(x=x, beta=np.full(builder.node_count, np.nan),
                           level_value=model_level(builder, pools, x), wall_time=outcome.wall_time, fallback=True)
    if not outcome.optimal:
        raise SolverFailure(f"LMP求解失败: {outcome.message}", status=outcome.status.value)

    x, beta = builder.split(outcome.primal)
    # 内点解可能轻微越界
    master = builder.problem.master
    x = np.clip(x, master.x_lower, master.x_upper)
    level = model_level(builder, pools, x)
    if level > target + LEVEL_TOL * (1.0 + abs(target)):
        logger.warning(f"LMP解水平值 {level:.8f} 超过目标 {target:.8f}")
    return LmpSolution(x=x, beta=beta, level_value=level, wall_time=outcome.wall_time)


def improvement_ratio(state: TargetState, L_lbo_cur: float) -> Optional[float]:
    """实际改进 / 期望改进；任一非正时返回 None"""
    if state.lbo_prev is None or state.target_prev is None or math.isinf(state.target_prev):
        return None
    actual = state.lbo_prev - L_lbo_cur
    expected = state.lbo_prev - state.target_prev
    if actual > 0 and expected > 0:
        return actual / expected
    return None


def update_gamma(state: TargetState, L_lbo_cur: float, cfg: StabilisationConfig) -> float:
    """
    动态 γ 更新

    r ≤ p_low: γ ← 1 − ω(1 − γ)
    r ≥ p_high: γ ← ωγ
    其余情况（含信息不精确导致 r 无定义）保持不变；结果截断到区间内
    """
    ratio = improvement_ratio(state, L_lbo_cur)
    gamma = state.gamma
    if ratio is not None:
        if ratio <= cfg.p_low:
            gamma = 1.0 - cfg.omega * (1.0 - gamma)
        elif ratio >= cfg.p_high:
            gamma = cfg.omega * gamma
    gamma = cfg.clamp(gamma)
    state.gamma = gamma
    state.lbo_prev = L_lbo_cur
    return gamma
