"""
分解算法模块

包含：
- 割与割池、主问题构造
- 标准Benders
- 自适应预言机与求解点集
- 水平集稳定化与动态 γ
- 自适应Benders引擎
- 割有效性抽检
"""

from .cuts import Cut, CutPool
from .results import IterationRecord, RunResult, RunStatus, TRACE_COLUMNS, relative_gap
from .master_problem import MasterProblemBuilder
from .subproblem import ExactEvaluation, SubproblemEvaluator
from .standard_benders import StandardBenders, evaluate_exact, run_standard, solve_rmp
from .adaptive_oracles import (
    OracleAnswer,
    SolvedPoint,
    SolvedPointStore,
    insert,
    load_checkpoint,
    lower_oracle,
    query,
    save_checkpoint,
    seed,
    upper_oracle,
)
from .level_set import StabilisationConfig, TargetState, compute_target, solve_lmp, update_gamma
from .adaptive_benders import AdaptiveBenders, EngineConfig, inner_stop, run_adaptive, select_subproblem
from .audit import audit_cuts

__all__ = [
    "Cut",
    "CutPool",
    "IterationRecord",
    "RunResult",
    "RunStatus",
    "TRACE_COLUMNS",
    "relative_gap",
    "MasterProblemBuilder",
    "ExactEvaluation",
    "SubproblemEvaluator",
    "StandardBenders",
    "evaluate_exact",
    "run_standard",
    "solve_rmp",
    "OracleAnswer",
    "SolvedPoint",
    "SolvedPointStore",
    "insert",
    "load_checkpoint",
    "lower_oracle",
    "query",
    "save_checkpoint",
    "seed",
    "upper_oracle",
    "StabilisationConfig",
    "TargetState",
    "compute_target",
    "solve_lmp",
    "update_gamma",
    "AdaptiveBenders",
    "EngineConfig",
    "inner_stop",
    "run_adaptive",
    "select_subproblem",
    "audit_cuts",
]
