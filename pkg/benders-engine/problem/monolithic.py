"""
整体LP组装

变量顺序 (x, y_0, ..., y_{|I|-1})，仅用于小规模实例的正确性校验。
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
from loguru import logger

from backend.lp_backend import LinearProgram, LPBackend, SolveStatus
from config import config
from core.exceptions import MasterInfeasible, MonolithicTooLarge, SolverFailure
from .structured_problem import StructuredProblem


@dataclass
class MonolithicSolution:
    objective: float
    x: np.ndarray
    ys: List[np.ndarray]
    wall_time: float


def estimate_nonzeros(problem: StructuredProblem) -> int:
    t = problem.template
    per_node = t.A.nnz
    coupling = sum((t.B @ node.x_selector).nnz for node in problem.nodes)
    return problem.master.A_x.nnz + per_node * problem.node_count + coupling


def assemble_monolithic(problem: StructuredProblem, nonzero_cap: Optional[int] = None) -> LinearProgram:
    """
    组装不分解的整体LP

    Args:
        problem: 结构化问题
        nonzero_cap: 非零元上限，默认读取配置

    Returns:
        整体 LinearProgram
    """
    cap = config.monolithic_nonzero_cap if nonzero_cap is None else nonzero_cap
    nnz = estimate_nonzeros(problem)
    if nnz > cap:
        raise MonolithicTooLarge(f"整体LP非零元 {nnz} 超过上限 {cap}")

    m, t = problem.master, problem.template
    n_nodes = problem.node_count

    c = np.concatenate([m.f] + [node.pi * (t.C.T @ node.c) for node in problem.nodes])

    blocks = [[m.A_x] + [None] * n_nodes] if m.n_rows else []
    for k, node in enumerate(problem.nodes):
        row = [-(t.B @ node.x_selector)] + [None] * n_nodes
        row[k + 1] = t.A
        blocks.append(row)
    A = sp.bmat(blocks, format="csr")

    senses = np.concatenate([m.senses] + [t.senses] * n_nodes)
    b = np.concatenate([m.b, np.zeros(t.con_dim * n_nodes)])
    lower = np.concatenate([m.x_lower] + [t.y_lower] * n_nodes)
    upper = np.concatenate([m.x_upper] + [t.y_upper] * n_nodes)

    logger.debug(f"整体LP组装完成: 变量 {c.shape[0]}, 约束 {A.shape[0]}, 非零元 {A.nnz}")
    return LinearProgram(c=c, A=A, senses=senses, b=b, lower=lower, upper=upper, name=f"{problem.name}_monolithic")


def solve_monolithic(problem: StructuredProblem, backend: Optional[LPBackend] = None,
                     nonzero_cap: Optional[int] = None) -> MonolithicSolution:
    """求解整体LP，返回最优值与各块解"""
    backend = backend or LPBackend()
    lp = assemble_monolithic(problem, nonzero_cap)
    outcome = backend.solve(lp)
    if outcome.status is SolveStatus.INFEASIBLE:
        raise MasterInfeasible(f"整体LP不可行: {outcome.message}")
    if not outcome.optimal:
        raise SolverFailure(f"整体LP求解失败: {outcome.message}", status=outcome.status.value)

    n = problem.master.x_dim
    y_dim = problem.template.y_dim
    z = outcome.primal
    ys = [z[n + k * y_dim: n + (k + 1) * y_dim] for k in range(problem.node_count)]
    logger.info(f"整体LP最优值: {outcome.objective:.6f} (耗时 {outcome.wall_time:.2f}s)")
    return MonolithicSolution(objective=outcome.objective, x=z[:n].copy(), ys=ys, wall_time=outcome.wall_time)
