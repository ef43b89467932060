"""
割有效性抽检

在 𝒳 中随机取可行点（随机目标顶点及其凸组合），精确求解子问题，
检查每个割 g(x_i') ≥ θ + λ'(x_i' − x̂) 是否成立。
"""
from dataclasses import dataclass
from typing import List

import numpy as np
from loguru import logger

from backend.lp_backend import LinearProgram
from core.exceptions import SolverFailure
from problem.structured_problem import StructuredProblem, node_view
from .cuts import CutPool
from .subproblem import SubproblemEvaluator

AUDIT_TOL = 1e-6


@dataclass
class CutViolation:
    node_id: int
    cut_index: int
    exact: float
    cut_value: float

    @property
    def excess(self) -> float:
        return self.cut_value - self.exact


def sample_feasible_points(problem: StructuredProblem, evaluator: SubproblemEvaluator, n_samples: int,
                           rng: np.random.Generator) -> List[np.ndarray]:
    """随机目标LP取 𝒳 的顶点，再做随机凸组合"""
    master = problem.master
    n_vertices = max(2, min(n_samples, 8))
    vertices = []
    for _ in range(n_vertices):
        lp = LinearProgram(c=rng.standard_normal(master.x_dim), A=master.A_x, senses=master.senses, b=master.b,
                           lower=master.x_lower, upper=master.x_upper, name="audit_vertex")
        outcome = evaluator.backend.solve(lp)
        if not outcome.optimal:
            raise SolverFailure(f"抽样顶点求解失败: {outcome.message}", status=outcome.status.value)
        vertices.append(outcome.primal)
    V = np.vstack(vertices)
    weights = rng.dirichlet(np.ones(len(vertices)), size=n_samples)
    points = weights @ V
    return [np.clip(p, master.x_lower, master.x_upper) for p in points]


def audit_cuts(problem: StructuredProblem, pools: CutPool, evaluator: SubproblemEvaluator, n_samples: int,
               rng: np.random.Generator) -> List[CutViolation]:
    """
    抽检割池中所有割的全局有效性

    Args:
        problem: 结构化问题
        pools: 割池
        evaluator: 子问题求解器
        n_samples: 抽样点数
        rng: 随机数生成器

    Returns:
        违反的割列表
    """
    violations: List[CutViolation] = []
    samples = sample_feasible_points(problem, evaluator, n_samples, rng)
    for x in samples:
        for node in problem.nodes:
            x_i = node_view(x, node)
            exact = evaluator.evaluate_exact(node, x_i).theta
            for k, cut in enumerate(pools.cuts(node.id)):
                value = cut.value_at(x_i)
                if value > exact + AUDIT_TOL * (1.0 + abs(exact)):
                    violations.append(CutViolation(node.id, k, exact, value))
    if violations:
        worst = max(violations, key=lambda v: v.excess)
        logger.warning(f"割抽检发现 {len(violations)} 处违反，最大超出 {worst.excess:.3g} (节点 {worst.node_id})")
    else:
        logger.info(f"割抽检通过: {n_samples} 个样本点, {pools.total_cuts()} 个割")
    return violations
