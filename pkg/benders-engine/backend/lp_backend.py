"""
LP/QP求解后端

唯一直接调用第三方求解器的模块：
- LP: scipy.optimize.linprog (HiGHS 对偶单纯形，顶点对偶)
- QP: cvxpy (默认 Clarabel)

对偶符号约定: dual[k] = ∂(最优目标)/∂(rhs[k])。
最小化问题中 ≤ 行的对偶 ≤ 0，≥ 行的对偶 ≥ 0，= 行无符号限制。
"""
import itertools
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import cvxpy as cp
import numpy as np
import scipy.sparse as sp
from loguru import logger
from scipy.optimize import linprog

from config import config
from core.exceptions import DimensionError

VALID_SENSES = ("<=", "==", ">=")


class SolveStatus(Enum):
    """求解状态"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(eq=False)
class LinearProgram:
    """
    min c'z + ½ z'Qz + offset
    s.t. A z (senses) b, lower ≤ z ≤ upper
    """
    c: np.ndarray
    A: sp.csr_matrix
    senses: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    Q: Optional[sp.csr_matrix] = None
    offset: float = 0.0
    name: str = "lp"
    col_names: Optional[Sequence[str]] = None
    row_names: Optional[Sequence[str]] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = sp.csr_matrix(self.A, dtype=float)
        self.senses = np.asarray(self.senses, dtype="<U2")
        self.b = np.asarray(self.b, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.Q is not None:
            self.Q = sp.csr_matrix(self.Q, dtype=float)

    @property
    def n_cols(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def is_quadratic(self) -> bool:
        return self.Q is not None and self.Q.nnz > 0

    def check_dimensions(self) -> None:
        """维度一致性检查，不一致时抛出 DimensionError"""
        n, m = self.n_cols, self.n_rows
        if self.A.shape[1] != n and m > 0:
            raise DimensionError(f"{self.name}: A 列数 {self.A.shape[1]} != 变量数 {n}")
        if self.b.shape[0] != m or self.senses.shape[0] != m:
            raise DimensionError(f"{self.name}: rhs/senses 长度与行数 {m} 不一致")
        if self.lower.shape[0] != n or self.upper.shape[0] != n:
            raise DimensionError(f"{self.name}: 变量界长度与变量数 {n} 不一致")
        bad = set(np.unique(self.senses)) - set(VALID_SENSES)
        if bad:
            raise DimensionError(f"{self.name}: 非法约束方向 {sorted(bad)}")
        if self.Q is not None:
            if self.Q.shape != (n, n):
                raise DimensionError(f"{self.name}: Q 形状 {self.Q.shape} != ({n}, {n})")
            asym = self.Q - self.Q.T
            if asym.nnz and abs(asym).max() > 1e-12:
                raise DimensionError(f"{self.name}: Q 不对称")


@dataclass
class SolveOutcome:
    """求解结果"""
    status: SolveStatus
    objective: float = float("nan")
    primal: Optional[np.ndarray] = None
    dual: Optional[np.ndarray] = None
    wall_time: float = 0.0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


@dataclass
class SolverOptions:
    """求解选项"""
    method: str = field(default_factory=lambda: config.lp_backend)
    feasibility_tol: float = field(default_factory=lambda: config.feasibility_tol)
    optimality_tol: float = field(default_factory=lambda: config.optimality_tol)
    qp_solver: str = field(default_factory=lambda: config.qp_solver)
    qp_relaxed_tol: float = field(default_factory=lambda: config.qp_relaxed_tol)
    time_limit: Optional[float] = None
    dump_dir: Optional[str] = field(default_factory=lambda: config.lp_dump_dir)


class LPBackend:
    """LP/QP 求解后端"""

    def __init__(self, options: Optional[SolverOptions] = None):
        self.options = options or SolverOptions()
        self._dump_counter = itertools.count()
        self._lock = threading.Lock()
        self.stats = {
            "lp_solves": 0,
            "qp_solves": 0,
            "solver_time_s": 0.0,
        }

    def solve(self, lp: LinearProgram, opts: Optional[SolverOptions] = None) -> SolveOutcome:
        """
        求解LP或QP

        Args:
            lp: 线性规划（含可选二次项）
            opts: 求解选项，默认使用后端选项

        Returns:
            求解结果；数值失败以状态返回，由调用方升级为异常
        """
        opts = opts or self.options
        lp.check_dimensions()

        if opts.dump_dir:
            self._dump(lp, opts.dump_dir)

        start = time.perf_counter()
        if lp.is_quadratic:
            outcome = self._solve_qp(lp, opts)
        else:
            outcome = self._solve_lp(lp, opts)
        outcome.wall_time = time.perf_counter() - start

        with self._lock:
            self.stats["qp_solves" if lp.is_quadratic else "lp_solves"] += 1
            self.stats["solver_time_s"] += outcome.wall_time

        if outcome.status is SolveStatus.NUMERICAL_FAILURE:
            logger.warning(f"求解数值失败: {lp.name} - {outcome.message}")
        return outcome

    # ------------------------------------------------------------------ LP

    @staticmethod
    def lp_attempts(method: str) -> list:
        """
        LP 求解尝试序列: 原方法 → 关闭预处理 → 内点法
        """
        attempts = [(method, True), (method, False)]
        if method != "highs-ipm":
            attempts.append(("highs-ipm", True))
        return attempts

    def _solve_lp(self, lp: LinearProgram, opts: SolverOptions) -> SolveOutcome:
        outcome = None
        attempts = self.lp_attempts(opts.method)
        for i, (method, presolve) in enumerate(attempts):
            outcome, retry = self._solve_lp_once(lp, opts, method, presolve)
            if not retry:
                return outcome
            if i + 1 < len(attempts):
                nxt_method, nxt_presolve = attempts[i + 1]
                logger.warning(
                    f"LP求解未得到确定状态 ({lp.name}: {outcome.message})，"
                    f"改用 {nxt_method}{'' if nxt_presolve else ' (关闭预处理)'} 重试"
                )
        return outcome

    def _solve_lp_once(self, lp: LinearProgram, opts: SolverOptions, method: str, presolve: bool):
        """
        单次 linprog 调用

        Returns:
            (求解结果, 是否需要换方式重试)
        """
        le = lp.senses == "<="
        ge = lp.senses == ">="
        eq = lp.senses == "=="
        ub_rows = np.flatnonzero(le | ge)
        eq_rows = np.flatnonzero(eq)

        A_ub = b_ub = A_eq = b_eq = None
        flip = None
        if ub_rows.size:
            flip = np.where(ge[ub_rows], -1.0, 1.0)
            A_ub = sp.diags(flip) @ lp.A[ub_rows]
            b_ub = flip * lp.b[ub_rows]
        if eq_rows.size:
            A_eq = lp.A[eq_rows]
            b_eq = lp.b[eq_rows]

        bounds = [
            (None if np.isneginf(lo) else lo, None if np.isposinf(hi) else hi)
            for lo, hi in zip(lp.lower, lp.upper)
        ]
        options = {
            "presolve": presolve,
            "primal_feasibility_tolerance": opts.feasibility_tol,
            "dual_feasibility_tolerance": opts.optimality_tol,
        }
        if opts.time_limit:
            options["time_limit"] = opts.time_limit

        try:
            res = linprog(
                lp.c,
                A_ub=A_ub,
                b_ub=b_ub,
                A_eq=A_eq,
                b_eq=b_eq,
                bounds=bounds,
                method=method,
                options=options,
            )
        except ValueError as e:
            return SolveOutcome(SolveStatus.NUMERICAL_FAILURE, message=str(e)), True

        message = str(res.message)
        status = int(res.status)
        if status == 0:
            dual = np.zeros(lp.n_rows)
            if ub_rows.size:
                dual[ub_rows] = flip * np.asarray(res.ineqlin.marginals)
            if eq_rows.size:
                dual[eq_rows] = np.asarray(res.eqlin.marginals)
            return SolveOutcome(
                SolveStatus.OPTIMAL,
                objective=float(res.fun) + lp.offset,
                primal=np.asarray(res.x, dtype=float),
                dual=dual,
                message=message,
            ), False
        # 预处理只给出"不可行或无界"时需换方式区分
        ambiguous = status in (2, 4) and "unbounded" in message.lower() and "infeasible" in message.lower()
        if status == 2 and not ambiguous:
            return SolveOutcome(SolveStatus.INFEASIBLE, message=message), False
        if status == 3:
            return SolveOutcome(SolveStatus.UNBOUNDED, message=message), False
        if status == 1:
            return SolveOutcome(SolveStatus.NUMERICAL_FAILURE, message=message), False
        # 状态 4 及 HiGHS 未识别的模型状态
        return SolveOutcome(SolveStatus.NUMERICAL_FAILURE, message=message), True

    # ------------------------------------------------------------------ QP

    def _solve_qp(self, lp: LinearProgram, opts: SolverOptions) -> SolveOutcome:
        outcome = self._solve_qp_once(lp, opts, opts.feasibility_tol, relaxed=False)
        if outcome.status is SolveStatus.NUMERICAL_FAILURE:
            logger.warning(f"QP数值失败，放宽容差至 {opts.qp_relaxed_tol} 重试: {lp.name}")
            outcome = self._solve_qp_once(lp, opts, opts.qp_relaxed_tol, relaxed=True)
        return outcome

    def _solve_qp_once(self, lp: LinearProgram, opts: SolverOptions, tol: float, relaxed: bool) -> SolveOutcome:
        z = cp.Variable(lp.n_cols)
        objective = 0.5 * cp.quad_form(z, cp.psd_wrap(lp.Q)) + lp.c @ z

        le = np.flatnonzero(lp.senses == "<=")
        ge = np.flatnonzero(lp.senses == ">=")
        eq = np.flatnonzero(lp.senses == "==")
        constraints = []
        row_groups = []
        for rows, build in (
            (le, lambda M, r: M @ z <= r),
            (ge, lambda M, r: M @ z >= r),
            (eq, lambda M, r: M @ z == r),
        ):
            if rows.size:
                constraints.append(build(lp.A[rows], lp.b[rows]))
                row_groups.append(rows)
        finite_lo = np.flatnonzero(np.isfinite(lp.lower))
        finite_hi = np.flatnonzero(np.isfinite(lp.upper))
        if finite_lo.size:
            constraints.append(z[finite_lo] >= lp.lower[finite_lo])
        if finite_hi.size:
            constraints.append(z[finite_hi] <= lp.upper[finite_hi])

        problem = cp.Problem(cp.Minimize(objective), constraints)
        try:
            problem.solve(solver=opts.qp_solver, **self._qp_tolerances(opts.qp_solver, tol))
        except cp.error.SolverError as e:
            return SolveOutcome(SolveStatus.NUMERICAL_FAILURE, message=str(e))

        status = problem.status
        accepted = {cp.OPTIMAL} | ({cp.OPTIMAL_INACCURATE} if relaxed else set())
        if status in accepted:
            dual = np.zeros(lp.n_rows)
            for rows, con in zip(row_groups, constraints):
                if con.dual_value is not None:
                    # cvxpy 乘子为非负拉格朗日乘子，换算为 ∂obj/∂rhs
                    sign = -1.0 if rows is le or rows is eq else 1.0
                    dual[rows] = sign * np.asarray(con.dual_value, dtype=float).ravel()
            return SolveOutcome(
                SolveStatus.OPTIMAL,
                objective=float(problem.value) + lp.offset,
                primal=np.asarray(z.value, dtype=float),
                dual=dual,
                message=status,
            )
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return SolveOutcome(SolveStatus.INFEASIBLE, message=status)
        if status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            return SolveOutcome(SolveStatus.UNBOUNDED, message=status)
        return SolveOutcome(SolveStatus.NUMERICAL_FAILURE, message=str(status))

    @staticmethod
    def _qp_tolerances(solver: str, tol: float) -> dict:
        solver = solver.upper()
        if solver == "CLARABEL":
            return {"tol_gap_abs": tol, "tol_gap_rel": tol, "tol_feas": tol}
        if solver == "OSQP":
            return {"eps_abs": tol, "eps_rel": tol, "polish": True}
        if solver == "SCS":
            return {"eps": tol}
        return {}

    # ------------------------------------------------------------------ dump

    def _dump(self, lp: LinearProgram, dump_dir: str) -> None:
        from .lp_writer import write_lp_file

        path = Path(dump_dir) / f"{lp.name}_{next(self._dump_counter):06d}.lp"
        try:
            write_lp_file(lp, path)
        except OSError as e:
            logger.error(f"LP文件导出失败: {path} - {e}")
