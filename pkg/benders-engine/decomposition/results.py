"""
运行结果与迭代记录
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

# trace.csv 固定列顺序；前九列为核心字段，其后为时间归因等扩展字段
TRACE_COLUMNS = [
    "iter",
    "n_exact_cum",
    "L_star",
    "U_star",
    "L_lbo",
    "U_ubo",
    "gamma",
    "target",
    "wall_time_s",
    "ratio",
    "level_value",
    "solver_time_s",
    "oracle_time_s",
    "inner_solves",
]


class RunStatus(Enum):
    """运行状态"""
    CONVERGED = "Converged"
    ITERATION_LIMIT = "IterationLimit"
    SOLVER_FAILURE = "SolverFailure"


def relative_gap(upper: float, lower: float) -> float:
    """相对间隙 (U − L) / max(|U|, 1)"""
    if not math.isfinite(upper):
        return math.inf
    return (upper - lower) / max(abs(upper), 1.0)


@dataclass
class IterationRecord:
    """单次外迭代记录"""
    iter: int
    n_exact_cum: int
    L_star: float
    U_star: float
    L_lbo: float = math.nan
    U_ubo: float = math.nan
    gamma: float = math.nan
    target: float = math.nan
    wall_time_s: float = 0.0
    ratio: float = math.nan
    level_value: float = math.nan
    solver_time_s: float = 0.0
    oracle_time_s: float = 0.0
    inner_solves: int = 0

    def as_row(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in TRACE_COLUMNS}


@dataclass
class RunResult:
    """引擎运行结果"""
    engine: str
    status: RunStatus
    iterations: int
    exact_evaluations: int
    lower_bound: float
    upper_bound: float
    incumbent: Optional[np.ndarray]
    records: List[IterationRecord] = field(default_factory=list)
    trajectory: List[np.ndarray] = field(default_factory=list)
    wall_time_s: float = 0.0
    failure: Optional[str] = None
    eps: float = math.nan
    settings: Dict[str, Any] = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return relative_gap(self.upper_bound, self.lower_bound)

    @property
    def best_gap(self) -> float:
        """整个运行中出现过的最小相对间隙"""
        gaps = [relative_gap(r.U_star, r.L_star) for r in self.records]
        return min(gaps) if gaps else math.inf

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED

    @property
    def path_length(self) -> float:
        """查询点轨迹长度 Σ‖x_j − x_{j−1}‖"""
        return float(sum(np.linalg.norm(b - a) for a, b in zip(self.trajectory, self.trajectory[1:])))

    def summary(self) -> Dict[str, Any]:
        return {
            "engine": self.engine,
            "status": self.status.value,
            "eps": self.eps,
            "iterations": self.iterations,
            "exact_evaluations": self.exact_evaluations,
            "wall_time_s": self.wall_time_s,
            "final_L": self.lower_bound,
            "final_U": self.upper_bound,
            "gap": self.gap,
            "best_gap": self.best_gap,
            "path_length": self.path_length,
            "incumbent": None if self.incumbent is None else [float(v) for v in self.incumbent],
            "failure": self.failure,
            "settings": self.settings,
        }
