"""
随机解价值 (VSS)

VSS = 在随机模型中执行期望值问题首阶段决策的成本 − 随机问题最优值
"""
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from loguru import logger

from backend.lp_backend import LPBackend
from core.exceptions import EngineError, MasterInfeasible
from problem.monolithic import solve_monolithic
from problem.structured_problem import StructuredProblem
from .instance import PowerSystemModel, build_model

# 求解函数: 结构化问题 → (最优值, 主变量解)
ProblemSolver = Callable[[StructuredProblem], Tuple[float, np.ndarray]]


@dataclass
class VssReport:
    stochastic_optimum: float
    ev_policy_cost: float
    vss: float
    percent: float
    ev_optimum: float = math.nan
    root_decision: Optional[list] = None

    def to_dict(self) -> dict:
        return asdict(self)


def monolithic_solver(backend: Optional[LPBackend] = None) -> ProblemSolver:
    """以整体LP作为精确求解器"""
    def solve(problem: StructuredProblem) -> Tuple[float, np.ndarray]:
        solution = solve_monolithic(problem, backend)
        return solution.objective, solution.x
    return solve


def fix_root_decision(model: PowerSystemModel, values: np.ndarray) -> StructuredProblem:
    """将随机问题根节点的新增容量固定为给定值"""
    problem = model.problem
    master = problem.master
    idx = np.array(model.master_layout.root_install_indices())
    lower = master.x_lower.copy()
    upper = master.x_upper.copy()
    fixed = np.clip(values, lower[idx], upper[idx])
    lower[idx] = fixed
    upper[idx] = fixed
    return StructuredProblem(
        master=master.with_bounds(lower, upper),
        template=problem.template,
        nodes=problem.nodes,
        name=f"{problem.name}_ev_policy",
    )


def compute_vss(model: PowerSystemModel, backend: Optional[LPBackend] = None,
                solver: Optional[ProblemSolver] = None) -> VssReport:
    """
    计算随机解价值

    Args:
        model: 随机问题模型
        backend: 求解后端（默认求解器使用）
        solver: 求解函数，默认整体LP

    Returns:
        VssReport
    """
    solver = solver or monolithic_solver(backend)
    optimum, _ = solver(model.problem)

    if model.tree.is_deterministic:
        logger.info("情景树只有一个情景，VSS = 0")
        return VssReport(stochastic_optimum=optimum, ev_policy_cost=optimum, vss=0.0, percent=0.0,
                         ev_optimum=optimum)

    ev_model = build_model(model.document, model.profile, tree=model.tree.expected_value_tree())
    ev_optimum, ev_x = solver(ev_model.problem)
    root = ev_x[np.array(ev_model.master_layout.root_install_indices())]

    try:
        ev_policy_cost, _ = solver(fix_root_decision(model, root))
    except MasterInfeasible as e:
        raise EngineError(f"期望值首阶段决策在随机模型中不可行: {e}") from e

    vss = ev_policy_cost - optimum
    if vss < -1e-6 * max(abs(optimum), 1.0):
        logger.warning(f"VSS 为负 ({vss:.6g})，请检查求解精度")
    percent = 100.0 * vss / optimum if optimum else 0.0
    logger.info(f"VSS = {vss:.6f} ({percent:.3f}% of optimum {optimum:.6f})")
    return VssReport(
        stochastic_optimum=optimum,
        ev_policy_cost=ev_policy_cost,
        vss=vss,
        percent=percent,
        ev_optimum=ev_optimum,
        root_decision=[float(v) for v in root],
    )
