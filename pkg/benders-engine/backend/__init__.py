"""
线性/二次规划求解后端

包含：
- LP/QP数据结构与求解结果
- HiGHS (scipy) 与 cvxpy 求解封装
- LP文本文件导出
"""

from .lp_backend import LinearProgram, LPBackend, SolveOutcome, SolveStatus, SolverOptions
from .lp_writer import write_lp_file

__all__ = [
    "LinearProgram",
    "LPBackend",
    "SolveOutcome",
    "SolveStatus",
    "SolverOptions",
    "write_lp_file",
]
