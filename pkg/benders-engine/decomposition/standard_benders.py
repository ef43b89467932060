"""
标准Benders分解

每次迭代: 求解RMP → 精确求解全部子问题 → 每节点加一个精确割 → 更新上界
"""
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from loguru import logger

from backend.lp_backend import LPBackend, SolveStatus
from config import config
from core.exceptions import MasterInfeasible, SolverFailure
from problem.structured_problem import DecisionNode, StructuredProblem, node_view
from .audit import audit_cuts
from .cuts import Cut, CutPool
from .master_problem import MasterProblemBuilder
from .results import IterationRecord, RunResult, RunStatus, relative_gap
from .subproblem import ExactEvaluation, SubproblemEvaluator


@dataclass
class RmpSolution:
    x: np.ndarray
    beta: np.ndarray
    lower_bound: float
    wall_time: float


def solve_rmp(builder: MasterProblemBuilder, pools: CutPool, backend: LPBackend) -> RmpSolution:
    """
    求解受限主问题

    Args:
        builder: 主问题构造器
        pools: 割池
        backend: 求解后端

    Returns:
        RMP 解，lower_bound = f'x + Σπβ 为全局下界
    """
    outcome = backend.solve(builder.build_rmp(pools))
    if outcome.status is SolveStatus.INFEASIBLE:
        raise MasterInfeasible(f"RMP不可行，𝒳 为空: {outcome.message}")
    if not outcome.optimal:
        raise SolverFailure(f"RMP求解失败: {outcome.message}", status=outcome.status.value)
    x, beta = builder.split(outcome.primal)
    return RmpSolution(x=x, beta=beta, lower_bound=float(outcome.objective), wall_time=outcome.wall_time)


def evaluate_exact(node: DecisionNode, x_i: np.ndarray, evaluator: SubproblemEvaluator) -> ExactEvaluation:
    """精确求解节点子问题，返回 (θ, λ, φ)"""
    return evaluator.evaluate_exact(node, x_i)


class StandardBenders:
    """标准Benders引擎"""

    engine_name = "standard"

    def __init__(
        self,
        problem: StructuredProblem,
        eps: float = None,
        iter_limit: int = None,
        backend: Optional[LPBackend] = None,
        threads: int = None,
        floor: float = 0.0,
        audit_samples: int = 0,
        callback: Optional[Callable[[IterationRecord], None]] = None,
    ):
        self.problem = problem
        self.eps = config.default_eps if eps is None else eps
        if not self.eps > 0:
            raise ValueError(f"eps 必须为正: {self.eps}")
        self.iter_limit = config.iteration_limit if iter_limit is None else iter_limit
        self.backend = backend or LPBackend()
        self.threads = max(1, config.threads if threads is None else threads)
        self.callback = callback
        self.audit_samples = audit_samples

        self.builder = MasterProblemBuilder(problem)
        self.pools = CutPool(problem.node_count, floor=floor)
        self.evaluator = SubproblemEvaluator(problem.template, self.backend)
        self.log = logger.bind(engine=self.engine_name)

    def _evaluate_all(self, x: np.ndarray, executor: Optional[ThreadPoolExecutor]) -> List[ExactEvaluation]:
        views = [node_view(x, node) for node in self.problem.nodes]
        if executor is None:
            return [self.evaluator.evaluate_exact(n, v) for n, v in zip(self.problem.nodes, views)]
        return list(executor.map(self.evaluator.evaluate_exact, self.problem.nodes, views))

    def run(self) -> RunResult:
        """
        运行标准Benders

        Returns:
            RunResult
        """
        problem = self.problem
        f = problem.master.f
        pi = problem.probabilities
        upper, lower = math.inf, -math.inf
        incumbent = None
        records: List[IterationRecord] = []
        trajectory: List[np.ndarray] = []
        n_exact = 0
        status = RunStatus.ITERATION_LIMIT
        failure = None
        iteration = 0

        self.log.info(f"开始标准Benders: 节点 {problem.node_count}, eps={self.eps}%")
        start = time.perf_counter()
        executor = ThreadPoolExecutor(max_workers=self.threads) if self.threads > 1 else None
        try:
            for iteration in range(1, self.iter_limit + 1):
                rmp = solve_rmp(self.builder, self.pools, self.backend)
                lower = max(lower, rmp.lower_bound)
                x = rmp.x
                trajectory.append(x)

                evaluations = self._evaluate_all(x, executor)
                n_exact += len(evaluations)

                value = float(f @ x + pi @ np.array([ev.theta for ev in evaluations]))
                if value < upper:
                    upper, incumbent = value, x.copy()

                # 单点同步加割
                for node, ev in zip(problem.nodes, evaluations):
                    self.pools.add(node.id, Cut(node_view(x, node), ev.theta, ev.lam, exact=True))

                record = IterationRecord(
                    iter=iteration,
                    n_exact_cum=n_exact,
                    L_star=lower,
                    U_star=upper,
                    L_lbo=value,
                    U_ubo=value,
                    wall_time_s=time.perf_counter() - start,
                    solver_time_s=rmp.wall_time + sum(ev.wall_time for ev in evaluations),
                    inner_solves=len(evaluations),
                )
                records.append(record)
                if self.callback:
                    self.callback(record)

                gap = relative_gap(upper, lower)
                self.log.info(f"迭代 {iteration}: L*={lower:.6f}, U*={upper:.6f}, gap={gap * 100:.4f}%")
                if gap <= self.eps / 100.0:
                    status = RunStatus.CONVERGED
                    break
        except SolverFailure as e:
            e.with_iteration(iteration)
            self.log.error(f"求解器失败: {e}")
            status, failure = RunStatus.SOLVER_FAILURE, str(e)
        finally:
            if executor is not None:
                executor.shutdown(wait=True)

        settings = {"cuts": self.pools.total_cuts()}
        if self.audit_samples and status is not RunStatus.SOLVER_FAILURE:
            violations = audit_cuts(problem, self.pools, self.evaluator, self.audit_samples,
                                    np.random.default_rng(0))
            settings["audit_violations"] = len(violations)

        result = RunResult(
            engine=self.engine_name,
            status=status,
            iterations=len(records),
            exact_evaluations=n_exact,
            lower_bound=lower,
            upper_bound=upper,
            incumbent=incumbent,
            records=records,
            trajectory=trajectory,
            wall_time_s=time.perf_counter() - start,
            failure=failure,
            eps=self.eps,
            settings=settings,
        )
        self.log.info(
            f"标准Benders结束: {status.value}, 迭代 {result.iterations}, "
            f"精确求解 {n_exact}, 耗时 {result.wall_time_s:.2f}s"
        )
        return result


def run_standard(problem: StructuredProblem, eps: float = None, iter_limit: int = None,
                 backend: Optional[LPBackend] = None, threads: int = None) -> RunResult:
    """运行标准Benders的便捷入口"""
    return StandardBenders(problem, eps=eps, iter_limit=iter_limit, backend=backend, threads=threads).run()
