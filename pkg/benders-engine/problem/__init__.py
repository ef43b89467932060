"""
结构化问题模块

包含：
- 子问题模板、决策节点、主问题块
- 结构校验与节点视图
- 整体LP组装（小规模校验用）
"""

from .structured_problem import (
    DecisionNode,
    MasterBlock,
    StructuredProblem,
    SubproblemTemplate,
    ValidationIssue,
    ValidationReport,
    node_view,
    validate,
)
from .monolithic import MonolithicSolution, assemble_monolithic, solve_monolithic

__all__ = [
    "DecisionNode",
    "MasterBlock",
    "StructuredProblem",
    "SubproblemTemplate",
    "ValidationIssue",
    "ValidationReport",
    "node_view",
    "validate",
    "MonolithicSolution",
    "assemble_monolithic",
    "solve_monolithic",
]
