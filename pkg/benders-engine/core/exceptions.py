"""
分解引擎异常体系
"""
from typing import Any, Dict, List, Optional


class EngineError(Exception):
    """引擎异常基类"""


class DimensionError(EngineError, ValueError):
    """向量或矩阵维度不一致"""


class InstanceParseError(EngineError):
    """实例文件无法解析"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = f" (行 {line}, 列 {column})" if line is not None else ""
        super().__init__(f"{message}{location}")


class InstanceValidationError(EngineError):
    """实例内容校验失败"""

    def __init__(self, message: str, locations: Optional[List[str]] = None):
        self.locations = locations or []
        super().__init__(message)


class MonolithicTooLarge(EngineError):
    """整体LP超过规模上限"""


class MasterInfeasible(EngineError):
    """主问题可行域为空"""


class SubproblemInfeasible(EngineError):
    """子问题不可行，属于建模错误"""

    def __init__(self, node_id: int, diagnostics: Dict[str, Any]):
        self.node_id = node_id
        self.diagnostics = diagnostics
        super().__init__(f"子问题 {node_id} 不可行: {diagnostics}")


class OracleDomainError(EngineError):
    """预言机查询点不满足种子点支配关系"""


class SolverFailure(EngineError):
    """求解器数值失败"""

    def __init__(self, message: str, status: Optional[str] = None, iteration: Optional[int] = None):
        self.status = status
        self.iteration = iteration
        super().__init__(message)

    def with_iteration(self, iteration: int) -> "SolverFailure":
        """附加迭代上下文"""
        if self.iteration is None:
            self.iteration = iteration
            self.args = (f"第 {iteration} 次迭代: {self.args[0]}",)
        return self
