"""
核心基础设施

包含：
- 日志初始化
- 异常体系
"""

from .exceptions import (
    EngineError,
    DimensionError,
    InstanceParseError,
    InstanceValidationError,
    MonolithicTooLarge,
    MasterInfeasible,
    SubproblemInfeasible,
    OracleDomainError,
    SolverFailure,
)
from .logging import setup_logging

__all__ = [
    "EngineError",
    "DimensionError",
    "InstanceParseError",
    "InstanceValidationError",
    "MonolithicTooLarge",
    "MasterInfeasible",
    "SubproblemInfeasible",
    "OracleDomainError",
    "SolverFailure",
    "setup_logging",
]
