"""
子问题精确求解

θ = g(x_i, c)，λ = B'·dual（对 x_i 的次梯度），φ = C y*
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from backend.lp_backend import LinearProgram, LPBackend, SolveStatus
from core.exceptions import DimensionError, SolverFailure, SubproblemInfeasible
from problem.structured_problem import DecisionNode, SubproblemTemplate


@dataclass
class ExactEvaluation:
    theta: float
    lam: np.ndarray
    phi: np.ndarray
    y: np.ndarray
    wall_time: float


class SubproblemEvaluator:
    """共享模板上的子问题求解器"""

    def __init__(self, template: SubproblemTemplate, backend: Optional[LPBackend] = None):
        self.template = template
        self.backend = backend or LPBackend()
        self._CT = template.C.T.tocsr()
        self._BT = template.B.T.tocsr()

    def build_lp(self, x_i: np.ndarray, c: np.ndarray, name: str = "sp") -> LinearProgram:
        t = self.template
        return LinearProgram(
            c=self._CT @ c,
            A=t.A,
            senses=t.senses,
            b=t.B @ x_i,
            lower=t.y_lower,
            upper=t.y_upper,
            name=name,
            col_names=t.y_names,
            row_names=t.row_names,
        )

    def evaluate(self, x_i: np.ndarray, c: np.ndarray, node_id: int = -1) -> ExactEvaluation:
        """
        在 (x_i, c) 处精确求解子问题

        Args:
            x_i: 节点视图
            c: 成本向量
            node_id: 节点编号（诊断用）

        Returns:
            ExactEvaluation
        """
        x_i = np.asarray(x_i, dtype=float)
        c = np.asarray(c, dtype=float)
        if x_i.shape != (self.template.x_dim,):
            raise DimensionError(f"x_i 长度 {x_i.shape} != 模板 B 列数 {self.template.x_dim}")
        if c.shape != (self.template.cost_dim,):
            raise DimensionError(f"c 长度 {c.shape} != 模板 C 行数 {self.template.cost_dim}")

        outcome = self.backend.solve(self.build_lp(x_i, c, name=f"sp_{node_id}"))
        if outcome.status is SolveStatus.INFEASIBLE:
            logger.error(f"子问题 {node_id} 不可行，请检查切负荷变量")
            raise SubproblemInfeasible(node_id, {
                "message": outcome.message,
                "x_i_min": float(x_i.min(initial=0.0)),
                "x_i_max": float(x_i.max(initial=0.0)),
            })
        if not outcome.optimal:
            raise SolverFailure(f"子问题 {node_id} 求解失败: {outcome.message}", status=outcome.status.value)

        y = outcome.primal
        phi = self.template.C @ y
        lam = self._BT @ outcome.dual
        theta = float(outcome.objective)
        logger.debug(f"子问题 {node_id}: θ={theta:.6f}, 耗时 {outcome.wall_time * 1000:.1f}ms")
        return ExactEvaluation(theta=theta, lam=lam, phi=phi, y=y, wall_time=outcome.wall_time)

    def evaluate_exact(self, node: DecisionNode, x_i: np.ndarray) -> ExactEvaluation:
        """节点自身成本向量下的精确求解"""
        return self.evaluate(x_i, node.c, node.id)
