"""
自适应预言机Benders（可选水平集稳定化）

外迭代: RMP → 目标值 → LMP（或直接用 RMP 解）→ 全节点预言机查询
内循环: 选加权间隙最大的节点精确求解 → 入点集 → 刷新全部节点预言机 → 给每个节点加不精确割
稳定化时查询点的下界须越过重算目标才允许提前结束内循环；全局间隙已达 eps 时立即结束
外迭代结束: U* := min(U*, U^UBO)，参考点更新为本次查询点
"""
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from backend.lp_backend import LPBackend
from config import config
from core.exceptions import SolverFailure
from problem.structured_problem import StructuredProblem, node_view
from .adaptive_oracles import OracleAnswer, SolvedPoint, SolvedPointStore, query, seed
from .audit import audit_cuts
from .cuts import Cut, CutPool
from .level_set import (
    StabilisationConfig,
    TargetState,
    compute_target,
    improvement_ratio,
    leaves_level_set,
    solve_lmp,
    update_gamma,
)
from .master_problem import MasterProblemBuilder
from .results import IterationRecord, RunResult, RunStatus, relative_gap
from .standard_benders import solve_rmp
from .subproblem import SubproblemEvaluator


class EngineConfig(BaseModel):
    """自适应引擎配置"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    eps: float = Field(default_factory=lambda: config.default_eps, gt=0.0)
    stabilisation: Optional[StabilisationConfig] = None
    iter_limit: int = Field(default_factory=lambda: config.iteration_limit, ge=1)
    # 内循环精确求解次数上限；None 时稳定化/选择模式取 |I|，基线模式取 1
    inner_cap: Optional[int] = Field(default=None, ge=1)
    full_inner_loop: bool = False
    weighted_selection: bool = True
    threads: int = Field(default_factory=lambda: config.threads, ge=1)
    audit_samples: int = Field(default=0, ge=0)
    audit_seed: int = 0
    seed_strategy: Optional[str] = None

    @property
    def stabilised(self) -> bool:
        return self.stabilisation is not None

    @property
    def engine_name(self) -> str:
        if self.stabilised:
            return "stabilised"
        return "adaptive-select" if self.full_inner_loop else "adaptive"

    def effective_inner_cap(self, node_count: int) -> int:
        if self.inner_cap is not None:
            return min(self.inner_cap, node_count)
        return node_count if (self.stabilised or self.full_inner_loop) else 1


def select_subproblem(answers: Sequence[OracleAnswer], probabilities: Sequence[float], weighted: bool = True) -> int:
    """
    选择加权间隙 π_i(θ_hi − θ_lo) 最大的节点，平局取最小编号
    """
    if not answers:
        raise ValueError("没有可选择的节点")
    gaps = np.array([a.theta_hi - a.theta_lo for a in answers])
    if weighted:
        gaps = gaps * np.asarray(probabilities, dtype=float)
    return int(np.argmax(gaps))


def inner_stop(U_ubo: float, L_lbo: float, U_star_prev: float, L_star_prev: float, n: int, node_count: int) -> bool:
    """
    内循环终止条件（任一成立即停）:
    当前点预言机间隙不大于上一全局间隙；已求解超过 |I| 次；当前点被现有上界支配
    """
    if U_ubo - L_lbo <= U_star_prev - L_star_prev:
        return True
    if n > node_count:
        return True
    return L_lbo >= U_star_prev


class AdaptiveBenders:
    """自适应预言机Benders引擎"""

    def __init__(
        self,
        problem: StructuredProblem,
        cfg: Optional[EngineConfig] = None,
        backend: Optional[LPBackend] = None,
        store: Optional[SolvedPointStore] = None,
        callback: Optional[Callable[[IterationRecord], None]] = None,
    ):
        self.problem = problem
        self.cfg = cfg or EngineConfig()
        self.backend = backend or LPBackend()
        self.callback = callback
        self.builder = MasterProblemBuilder(problem)
        self.pools = CutPool(problem.node_count, floor=0.0)
        self.evaluator = SubproblemEvaluator(problem.template, self.backend)
        self.store = store
        self.log = logger.bind(engine=self.cfg.engine_name)

    def _sweep(self, views: List[np.ndarray], executor: Optional[ThreadPoolExecutor]) -> List[OracleAnswer]:
        snap = self.store.snapshot()
        nodes = self.problem.nodes

        def ask(k: int) -> OracleAnswer:
            return query(snap, views[k], nodes[k].c, self.backend)

        if executor is None:
            return [ask(k) for k in range(len(nodes))]
        return list(executor.map(ask, range(len(nodes))))

    def run(self) -> RunResult:
        """
        运行自适应Benders

        Returns:
            RunResult
        """
        cfg, problem = self.cfg, self.problem
        nodes = problem.nodes
        f = problem.master.f
        pi = problem.probabilities
        node_count = problem.node_count
        cap = cfg.effective_inner_cap(node_count)
        stab = cfg.stabilisation
        state = TargetState(gamma=stab.gamma0) if stab else None

        upper, lower = math.inf, -math.inf
        lower_prev = -math.inf
        incumbent = None
        x_ref = None
        records: List[IterationRecord] = []
        trajectory: List[np.ndarray] = []
        status = RunStatus.ITERATION_LIMIT
        failure = None
        iteration = 0
        n_exact = 0

        self.log.info(
            f"开始{cfg.engine_name}引擎: 节点 {node_count}, eps={cfg.eps}%, 内循环上限 {cap}"
            + (f", γ0={stab.gamma0}, 动态={stab.dynamic}" if stab else "")
        )
        start = time.perf_counter()
        executor = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
        try:
            if self.store is None:
                self.store = seed(problem, self.backend, self.evaluator, cfg.seed_strategy, cfg.threads)
                n_exact += 1

            for iteration in range(1, cfg.iter_limit + 1):
                solver_time = 0.0
                oracle_time = 0.0

                rmp = solve_rmp(self.builder, self.pools, self.backend)
                solver_time += rmp.wall_time
                lower = max(lower, rmp.lower_bound)
                if x_ref is None:
                    x_ref = rmp.x

                gamma_used = target = level_value = math.nan
                if stab:
                    gamma_used = state.gamma
                    target = compute_target(lower, upper, gamma_used)
                    state.target_prev = target
                    lmp = solve_lmp(self.builder, self.pools, x_ref, target, self.backend, x_rmp=rmp.x)
                    solver_time += lmp.wall_time
                    x_query = lmp.x
                    level_value = lmp.level_value
                else:
                    x_query = rmp.x
                trajectory.append(x_query)
                views = [node_view(x_query, node) for node in nodes]

                tick = time.perf_counter()
                answers = self._sweep(views, executor)
                oracle_time += time.perf_counter() - tick

                n = 0
                while True:
                    n += 1
                    k = select_subproblem(answers, pi, cfg.weighted_selection)
                    ev = self.evaluator.evaluate_exact(nodes[k], views[k])
                    solver_time += ev.wall_time
                    n_exact += 1
                    version = self.store.version
                    self.store.insert(SolvedPoint(x=views[k].copy(), c=nodes[k].c, theta=ev.theta,
                                                  lam=ev.lam, phi=ev.phi))
                    if self.store.version != version:
                        tick = time.perf_counter()
                        answers = self._sweep(views, executor)
                        oracle_time += time.perf_counter() - tick

                    for node, view, ans in zip(nodes, views, answers):
                        self.pools.add(node.id, Cut(view, ans.theta_lo, ans.lam_lo, exact=False))

                    base = float(f @ x_query)
                    L_lbo = base + float(pi @ np.array([a.theta_lo for a in answers]))
                    U_ubo = base + float(pi @ np.array([a.theta_hi for a in answers]))
                    self.log.debug(f"内循环 {n}: 节点 {k}, L_lbo={L_lbo:.6f}, U_ubo={U_ubo:.6f}")
                    if n >= cap or relative_gap(min(upper, U_ubo), lower) <= cfg.eps / 100.0:
                        break
                    # 点仍在水平集内时继续精确求解，否则 LMP 会原地返回该点
                    settled = (not stab or math.isinf(target)
                               or leaves_level_set(L_lbo, lower, min(upper, U_ubo), gamma_used))
                    if settled and inner_stop(U_ubo, L_lbo, upper, lower_prev, n, node_count):
                        break

                if U_ubo < upper:
                    upper, incumbent = U_ubo, x_query.copy()
                x_ref = x_query

                ratio = math.nan
                if stab and stab.dynamic:
                    r = improvement_ratio(state, L_lbo)
                    ratio = math.nan if r is None else r
                    update_gamma(state, L_lbo, stab)
                elif stab:
                    state.lbo_prev = L_lbo

                record = IterationRecord(
                    iter=iteration,
                    n_exact_cum=n_exact,
                    L_star=lower,
                    U_star=upper,
                    L_lbo=L_lbo,
                    U_ubo=U_ubo,
                    gamma=gamma_used,
                    target=target,
                    wall_time_s=time.perf_counter() - start,
                    ratio=ratio,
                    level_value=level_value,
                    solver_time_s=solver_time,
                    oracle_time_s=oracle_time,
                    inner_solves=n,
                )
                records.append(record)
                if self.callback:
                    self.callback(record)

                gap = relative_gap(upper, lower)
                self.log.info(
                    f"迭代 {iteration}: L*={lower:.6f}, U*={upper:.6f}, gap={gap * 100:.4f}%, "
                    f"内循环求解 {n}, 累计精确求解 {n_exact}"
                    + (f", γ={gamma_used:.4f}, T={target:.6f}" if stab else "")
                )
                lower_prev = lower
                if gap <= cfg.eps / 100.0:
                    status = RunStatus.CONVERGED
                    break
        except SolverFailure as e:
            e.with_iteration(iteration)
            self.log.error(f"求解器失败: {e}")
            status, failure = RunStatus.SOLVER_FAILURE, str(e)
        finally:
            if executor is not None:
                executor.shutdown(wait=True)

        settings = {
            "inner_cap": cap,
            "weighted_selection": cfg.weighted_selection,
            "stored_points": len(self.store) if self.store is not None else 0,
            "cuts": self.pools.total_cuts(),
        }
        if stab:
            settings.update(stab.model_dump())
            settings["gamma_final"] = state.gamma
        if cfg.audit_samples and status is not RunStatus.SOLVER_FAILURE:
            violations = audit_cuts(problem, self.pools, self.evaluator, cfg.audit_samples,
                                    np.random.default_rng(cfg.audit_seed))
            settings["audit_violations"] = len(violations)

        result = RunResult(
            engine=cfg.engine_name,
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
            eps=cfg.eps,
            settings=settings,
        )
        self.log.info(
            f"{cfg.engine_name}引擎结束: {status.value}, 迭代 {result.iterations}, "
            f"精确求解 {n_exact}, 耗时 {result.wall_time_s:.2f}s"
        )
        return result


def run_adaptive(problem: StructuredProblem, cfg: Optional[EngineConfig] = None,
                 backend: Optional[LPBackend] = None, store: Optional[SolvedPointStore] = None) -> RunResult:
    """运行自适应Benders的便捷入口"""
    return AdaptiveBenders(problem, cfg, backend, store).run()
