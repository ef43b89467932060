"""
自适应预言机

基于已精确求解点集 𝒮 = {(x_k, c_k, θ_k, λ_k, φ_k)}，对任意查询 (x̂, ĉ) 给出:
- 下界预言机: max Σ u_k (θ_k + λ_k'(x̂ − x_k))  s.t. Σ u_k c_k ⪯ ĉ, u ≥ 0
  返回 θ_lo 与次梯度 λ_lo = Σ u_k λ_k，构成全局有效的不精确割
- 上界预言机: min Σ u_k ĉ'φ_k  s.t. Σ u_k = 1, Σ u_k x_k ⪯ x̂, u ≥ 0
  返回 θ_hi 与 φ_hi = Σ u_k φ_k

有效性依赖 g 关于 x 凸且分量单调不增、关于 c 凹、单调不减且正齐次。
点集始终包含种子点 (x̲, c̲)，x̲、c̲ 分别为所有节点视图在 𝒳 上的分量下确界与成本向量分量最小值。
"""
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from loguru import logger

from backend.lp_backend import LinearProgram, LPBackend, SolveStatus
from config import config
from core.exceptions import OracleDomainError, SolverFailure
from problem.structured_problem import StructuredProblem
from .subproblem import SubproblemEvaluator

CHECKPOINT_FORMAT = "solved-point-store"
CHECKPOINT_VERSION = 1
# 查询点相对种子点的可容忍下越量（主问题解的数值误差）
DOMAIN_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SolvedPoint:
    """精确求解点"""
    x: np.ndarray
    c: np.ndarray
    theta: float
    lam: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        expected = float(self.c @ self.phi)
        if abs(self.theta - expected) > 1e-8 * max(1.0, abs(self.theta)):
            raise ValueError(f"θ={self.theta} 与 c'φ={expected} 不一致")

    def matches(self, x: np.ndarray, c: np.ndarray, tol: float) -> bool:
        return (
            np.max(np.abs(self.x - x), initial=0.0) <= tol
            and np.max(np.abs(self.c - c), initial=0.0) <= tol
        )


@dataclass
class OracleAnswer:
    """预言机回答"""
    theta_lo: float
    lam_lo: np.ndarray
    theta_hi: float
    phi_hi: np.ndarray

    @property
    def gap(self) -> float:
        return self.theta_hi - self.theta_lo


@dataclass(frozen=True, eq=False)
class StoreSnapshot:
    """点集的只读快照，供并发查询"""
    X: np.ndarray
    Cm: np.ndarray
    theta: np.ndarray
    Lam: np.ndarray
    Phi: np.ndarray
    seed_x: np.ndarray
    seed_c: np.ndarray
    version: int

    def __len__(self) -> int:
        return self.theta.shape[0]


class SolvedPointStore:
    """精确求解点集"""

    def __init__(self, seed_point: SolvedPoint, dedup_tol: Optional[float] = None):
        self.seed_x = seed_point.x.copy()
        self.seed_c = seed_point.c.copy()
        self.dedup_tol = config.duplicate_tol if dedup_tol is None else dedup_tol
        self.points: List[SolvedPoint] = [seed_point]
        self.version = 0
        self._snapshot: Optional[StoreSnapshot] = None
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self.points)

    @property
    def seed_point(self) -> SolvedPoint:
        return self.points[0]

    def snapshot(self) -> StoreSnapshot:
        with self._lock:
            if self._snapshot is None or self._snapshot.version != self.version:
                pts = self.points
                self._snapshot = StoreSnapshot(
                    X=np.vstack([p.x for p in pts]),
                    Cm=np.vstack([p.c for p in pts]),
                    theta=np.array([p.theta for p in pts]),
                    Lam=np.vstack([p.lam for p in pts]),
                    Phi=np.vstack([p.phi for p in pts]),
                    seed_x=self.seed_x,
                    seed_c=self.seed_c,
                    version=self.version,
                )
            return self._snapshot

    def find(self, x: np.ndarray, c: np.ndarray) -> Optional[SolvedPoint]:
        for point in self.points:
            if point.matches(x, c, self.dedup_tol):
                return point
        return None

    def insert(self, point: SolvedPoint) -> bool:
        """
        插入精确点；(x, c) 在容差内重复时跳过

        Returns:
            是否实际插入
        """
        with self._lock:
            if self.find(point.x, point.c) is not None:
                logger.debug("跳过重复求解点")
                return False
            self.points.append(point)
            self.version += 1
            return True


def insert(store: SolvedPointStore, point: SolvedPoint) -> SolvedPointStore:
    """插入求解点并返回点集"""
    store.insert(point)
    return store


def _as_snapshot(store) -> StoreSnapshot:
    return store if isinstance(store, StoreSnapshot) else store.snapshot()


def _exact_hit(snap: StoreSnapshot, x_hat: np.ndarray, c_hat: np.ndarray, tol: float) -> Optional[int]:
    """查询点与某已存点重合时返回其下标"""
    dx = np.max(np.abs(snap.X - x_hat), axis=1, initial=0.0)
    dc = np.max(np.abs(snap.Cm - c_hat), axis=1, initial=0.0)
    hits = np.flatnonzero((dx <= tol) & (dc <= tol))
    return int(hits[-1]) if hits.size else None


def _lower_fallback(snap: StoreSnapshot, a: np.ndarray, c_hat: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    下界LP失败时的退化下界: 只用单个已存点，u = t·e_k，t = min_j ĉ_j / c_kj

    u = 0 恒可行，结果不低于 0
    """
    best, lam = 0.0, np.zeros(snap.Lam.shape[1])
    for k in range(a.shape[0]):
        pos = snap.Cm[k] > 0
        if a[k] <= best or not np.any(pos):
            continue
        t = max(float(np.min(c_hat[pos] / snap.Cm[k, pos])), 0.0)
        if t * a[k] > best:
            best, lam = t * a[k], t * snap.Lam[k]
    return float(best), lam


def _upper_fallback(snap: StoreSnapshot, x_hat: np.ndarray, costs: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    上界LP失败时的退化上界: 满足 x_k ⪯ x̂ 的单个已存点中取最小 ĉ'φ_k（种子点恒满足）
    """
    slack = DOMAIN_TOL * (1.0 + np.abs(x_hat))
    feasible = np.flatnonzero(np.all(snap.X <= x_hat[None, :] + slack[None, :], axis=1))
    k = int(feasible[np.argmin(costs[feasible])])
    return float(costs[k]), snap.Phi[k].copy()


def lower_oracle(store, x_hat: np.ndarray, c_hat: np.ndarray, backend: LPBackend) -> Tuple[float, np.ndarray]:
    """
    下界预言机

    Args:
        store: 点集或其快照
        x_hat: 查询节点视图
        c_hat: 查询成本向量
        backend: 求解后端

    Returns:
        (θ_lo, λ_lo)
    """
    snap = _as_snapshot(store)
    if np.any(c_hat < snap.seed_c - DOMAIN_TOL * (1.0 + np.abs(snap.seed_c))):
        raise OracleDomainError("查询成本向量不满足 c̲ ⪯ ĉ")

    hit = _exact_hit(snap, x_hat, c_hat, config.duplicate_tol)
    if hit is not None:
        return float(snap.theta[hit]), snap.Lam[hit].copy()

    # a_k = θ_k + λ_k'(x̂ − x_k)
    a = snap.theta + np.einsum("kn,kn->k", snap.Lam, x_hat[None, :] - snap.X)
    k = a.shape[0]
    lp = LinearProgram(
        c=-a,
        A=sp.csr_matrix(snap.Cm.T),
        senses=np.full(snap.Cm.shape[1], "<="),
        b=c_hat,
        lower=np.zeros(k),
        upper=np.full(k, np.inf),
        name="lower_oracle",
    )
    outcome = backend.solve(lp)
    if outcome.status is SolveStatus.INFEASIBLE:
        raise OracleDomainError(f"下界预言机LP不可行，种子点违反: {outcome.message}")
    if not outcome.optimal:
        logger.warning(f"下界预言机求解失败 ({outcome.message})，退化为单点下界")
        return _lower_fallback(snap, a, c_hat)
    u = np.maximum(outcome.primal, 0.0)
    return float(u @ a), snap.Lam.T @ u


def upper_oracle(store, x_hat: np.ndarray, c_hat: np.ndarray, backend: LPBackend) -> Tuple[float, np.ndarray]:
    """
    上界预言机

    Returns:
        (θ_hi, φ_hi)
    """
    snap = _as_snapshot(store)
    slack = DOMAIN_TOL * (1.0 + np.abs(snap.seed_x))
    if np.any(x_hat < snap.seed_x - slack):
        raise OracleDomainError("查询点不满足 x̲ ⪯ x̂")
    # 数值误差范围内的下越量抬回种子点
    x_hat = np.maximum(x_hat, snap.seed_x)

    hit = _exact_hit(snap, x_hat, c_hat, config.duplicate_tol)
    if hit is not None:
        return float(c_hat @ snap.Phi[hit]), snap.Phi[hit].copy()

    k = snap.theta.shape[0]
    if k == 1:
        return float(c_hat @ snap.Phi[0]), snap.Phi[0].copy()

    costs = snap.Phi @ c_hat
    A = sp.vstack([sp.csr_matrix(snap.X.T), sp.csr_matrix(np.ones((1, k)))], format="csr")
    senses = np.concatenate([np.full(snap.X.shape[1], "<="), ["=="]])
    lp = LinearProgram(
        c=costs,
        A=A,
        senses=senses,
        b=np.append(x_hat, 1.0),
        lower=np.zeros(k),
        upper=np.full(k, np.inf),
        name="upper_oracle",
    )
    outcome = backend.solve(lp)
    if outcome.status is SolveStatus.INFEASIBLE:
        raise OracleDomainError(f"上界预言机LP不可行，种子点违反: {outcome.message}")
    if not outcome.optimal:
        logger.warning(f"上界预言机求解失败 ({outcome.message})，退化为单点上界")
        return _upper_fallback(snap, x_hat, costs)
    u = np.maximum(outcome.primal, 0.0)
    return float(u @ costs), snap.Phi.T @ u


def query(store, x_hat: np.ndarray, c_hat: np.ndarray, backend: LPBackend) -> OracleAnswer:
    """同时调用两个预言机"""
    snap = _as_snapshot(store)
    theta_lo, lam_lo = lower_oracle(snap, x_hat, c_hat, backend)
    theta_hi, phi_hi = upper_oracle(snap, x_hat, c_hat, backend)
    if theta_lo > theta_hi:
        # 舍入误差: 下调下界仍保持割有效
        logger.debug(f"预言机下界 {theta_lo:.10g} 超过上界 {theta_hi:.10g}，截断")
        theta_lo = theta_hi
    return OracleAnswer(theta_lo=theta_lo, lam_lo=lam_lo, theta_hi=theta_hi, phi_hi=phi_hi)


def compute_seed_point(problem: StructuredProblem, backend: LPBackend, strategy: Optional[str] = None,
                       threads: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    计算种子点 (x̲, c̲)

    Args:
        problem: 结构化问题
        backend: 求解后端
        strategy: "infimum" 对每个选择行在 𝒳 上求最小值；"bounds" 直接用主变量界
        threads: 并发LP数

    Returns:
        (x̲, c̲)
    """
    strategy = strategy or config.seed_strategy
    master = problem.master
    c_low = np.min(np.vstack([node.c for node in problem.nodes]), axis=0)

    if strategy == "bounds":
        lows = []
        for node in problem.nodes:
            S = node.x_selector
            pos, neg = S.maximum(0), S.minimum(0)
            lows.append(pos @ master.x_lower + neg @ master.x_upper)
        return np.min(np.vstack(lows), axis=0), c_low
    if strategy != "infimum":
        raise ValueError(f"未知的种子策略: {strategy}")

    # 相同选择行只求解一次
    unique_rows = {}
    for node in problem.nodes:
        S = node.x_selector.tocsr()
        for r in range(S.shape[0]):
            row = S.getrow(r)
            key = (tuple(row.indices.tolist()), tuple(np.round(row.data, 15).tolist()))
            unique_rows.setdefault(key, row.toarray().ravel())

    def minimise(direction: np.ndarray) -> float:
        lp = LinearProgram(c=direction, A=master.A_x, senses=master.senses, b=master.b,
                           lower=master.x_lower, upper=master.x_upper, name="seed_infimum")
        outcome = backend.solve(lp)
        if not outcome.optimal:
            raise SolverFailure(f"种子点下确界求解失败: {outcome.message}", status=outcome.status.value)
        return outcome.objective

    keys = list(unique_rows)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        values = dict(zip(keys, pool.map(minimise, [unique_rows[k] for k in keys])))

    lows = []
    for node in problem.nodes:
        S = node.x_selector.tocsr()
        row_vals = []
        for r in range(S.shape[0]):
            row = S.getrow(r)
            row_vals.append(values[(tuple(row.indices.tolist()), tuple(np.round(row.data, 15).tolist()))])
        lows.append(row_vals)
    return np.min(np.array(lows), axis=0), c_low


def seed(problem: StructuredProblem, backend: LPBackend, evaluator: Optional[SubproblemEvaluator] = None,
         strategy: Optional[str] = None, threads: int = 1) -> SolvedPointStore:
    """
    构造初始点集: 在 (x̲, c̲) 处精确求解

    Returns:
        只含种子点的 SolvedPointStore
    """
    evaluator = evaluator or SubproblemEvaluator(problem.template, backend)
    x_low, c_low = compute_seed_point(problem, backend, strategy, threads)
    ev = evaluator.evaluate(x_low, c_low, node_id=-1)
    logger.info(f"种子点求解完成: θ={ev.theta:.6f}")
    return SolvedPointStore(SolvedPoint(x=x_low, c=c_low, theta=ev.theta, lam=ev.lam, phi=ev.phi))


def save_checkpoint(store: SolvedPointStore, path) -> Path:
    """将点集写为带版本头的JSON检查点"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "created_at": datetime.now().isoformat(),
        "points": [
            {
                "x": p.x.tolist(),
                "c": p.c.tolist(),
                "theta": p.theta,
                "lam": p.lam.tolist(),
                "phi": p.phi.tolist(),
            }
            for p in store.points
        ],
    }
    path.write_text(json.dumps(payload), encoding="utf-8")
    logger.info(f"点集检查点已保存: {path} ({len(store)} 个点)")
    return path


def load_checkpoint(path) -> SolvedPointStore:
    """读取JSON检查点，首个点为种子点"""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != CHECKPOINT_FORMAT or payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"不支持的检查点格式: {payload.get('format')} v{payload.get('version')}")
    points = [
        SolvedPoint(
            x=np.asarray(p["x"], dtype=float),
            c=np.asarray(p["c"], dtype=float),
            theta=float(p["theta"]),
            lam=np.asarray(p["lam"], dtype=float),
            phi=np.asarray(p["phi"], dtype=float),
        )
        for p in payload["points"]
    ]
    store = SolvedPointStore(points[0])
    for point in points[1:]:
        store.insert(point)
    logger.info(f"点集检查点已加载: {path} ({len(store)} 个点)")
    return store
