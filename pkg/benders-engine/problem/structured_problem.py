"""
结构化问题数据模型

    min_{x∈𝒳} f(x) + Σ_i π_i g(x_i, c_i)
    g(x_i, c_i) = min_y c_i' C y  s.t.  A y (senses) B x_i,  y_lower ≤ y ≤ y_upper

所有决策节点共享同一 (A, B, C) 模板；x_i 由节点选择矩阵从主变量 x 线性提取。
x_i 的每个分量按"增大则 g 不增"的方向编码（需求取负号）。
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from core.exceptions import DimensionError

VALID_SENSES = ("<=", "==", ">=")


@dataclass(frozen=True, eq=False)
class SubproblemTemplate:
    """共享子问题模板"""
    A: sp.csr_matrix
    B: sp.csr_matrix
    C: sp.csr_matrix
    senses: np.ndarray
    y_lower: np.ndarray
    y_upper: np.ndarray
    y_names: Optional[Tuple[str, ...]] = None
    row_names: Optional[Tuple[str, ...]] = None

    @classmethod
    def build(cls, A, B, C, senses=None, y_lower=None, y_upper=None, y_names=None, row_names=None):
        A = sp.csr_matrix(A, dtype=float)
        y_dim = A.shape[1]
        senses = np.full(A.shape[0], "<=", dtype="<U2") if senses is None else np.asarray(senses, dtype="<U2")
        y_lower = np.zeros(y_dim) if y_lower is None else np.asarray(y_lower, dtype=float)
        y_upper = np.full(y_dim, np.inf) if y_upper is None else np.asarray(y_upper, dtype=float)
        return cls(
            A=A,
            B=sp.csr_matrix(B, dtype=float),
            C=sp.csr_matrix(C, dtype=float),
            senses=senses,
            y_lower=y_lower,
            y_upper=y_upper,
            y_names=tuple(y_names) if y_names is not None else None,
            row_names=tuple(row_names) if row_names is not None else None,
        )

    @property
    def y_dim(self) -> int:
        return self.A.shape[1]

    @property
    def con_dim(self) -> int:
        return self.A.shape[0]

    @property
    def x_dim(self) -> int:
        return self.B.shape[1]

    @property
    def cost_dim(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True, eq=False)
class DecisionNode:
    """决策节点: 概率权重、成本向量、主变量选择矩阵"""
    id: int
    pi: float
    c: np.ndarray
    x_selector: sp.csr_matrix
    label: str = ""

    @classmethod
    def from_indices(cls, node_id: int, pi: float, c, indices: Sequence[int], x_dim: int, label: str = ""):
        """按主变量下标构造投影选择矩阵"""
        indices = np.asarray(indices, dtype=int)
        selector = sp.csr_matrix(
            (np.ones(indices.size), (np.arange(indices.size), indices)),
            shape=(indices.size, x_dim),
        )
        return cls(id=node_id, pi=float(pi), c=np.asarray(c, dtype=float), x_selector=selector, label=label)


@dataclass(frozen=True, eq=False)
class MasterBlock:
    """主问题: min f'x, x ∈ 𝒳 = {A_x x (senses) b, x_lower ≤ x ≤ x_upper}"""
    f: np.ndarray
    A_x: sp.csr_matrix
    senses: np.ndarray
    b: np.ndarray
    x_lower: np.ndarray
    x_upper: np.ndarray
    x_names: Optional[Tuple[str, ...]] = None

    @classmethod
    def build(cls, f, A_x=None, senses=None, b=None, x_lower=None, x_upper=None, x_names=None):
        f = np.asarray(f, dtype=float)
        n = f.shape[0]
        A_x = sp.csr_matrix((0, n)) if A_x is None else sp.csr_matrix(A_x, dtype=float)
        m = A_x.shape[0]
        return cls(
            f=f,
            A_x=A_x,
            senses=np.full(m, "<=", dtype="<U2") if senses is None else np.asarray(senses, dtype="<U2"),
            b=np.zeros(m) if b is None else np.asarray(b, dtype=float),
            x_lower=np.zeros(n) if x_lower is None else np.asarray(x_lower, dtype=float),
            x_upper=np.full(n, np.inf) if x_upper is None else np.asarray(x_upper, dtype=float),
            x_names=tuple(x_names) if x_names is not None else None,
        )

    @property
    def x_dim(self) -> int:
        return self.f.shape[0]

    @property
    def n_rows(self) -> int:
        return self.A_x.shape[0]

    def with_bounds(self, x_lower: np.ndarray, x_upper: np.ndarray) -> "MasterBlock":
        """返回替换变量界后的新主问题块"""
        return MasterBlock(self.f, self.A_x, self.senses, self.b,
                           np.asarray(x_lower, dtype=float), np.asarray(x_upper, dtype=float), self.x_names)


@dataclass(frozen=True, eq=False)
class StructuredProblem:
    """结构化问题: 主问题 + 共享模板 + 决策节点"""
    master: MasterBlock
    template: SubproblemTemplate
    nodes: Tuple[DecisionNode, ...]
    name: str = "problem"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([node.pi for node in self.nodes])


@dataclass
class ValidationIssue:
    code: str
    message: str


@dataclass
class ValidationReport:
    """校验报告；为空表示问题结构完好"""
    issues: List[ValidationIssue] = field(default_factory=list)

    def add(self, code: str, message: str) -> None:
        self.issues.append(ValidationIssue(code, message))

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> List[str]:
        return [issue.code for issue in self.issues]

    def __len__(self) -> int:
        return len(self.issues)

    def __str__(self) -> str:
        if self.ok:
            return "校验通过"
        return "\n".join(f"[{i.code}] {i.message}" for i in self.issues)


def validate(problem: StructuredProblem) -> ValidationReport:
    """
    校验结构化问题，列出所有违反的类型不变式（不抛异常）

    Args:
        problem: 结构化问题

    Returns:
        校验报告
    """
    report = ValidationReport()
    t, m = problem.template, problem.master

    # 模板
    if t.B.shape[0] != t.con_dim:
        report.add("template_dim", f"B 行数 {t.B.shape[0]} != A 行数 {t.con_dim}")
    if t.C.shape[1] != t.y_dim:
        report.add("template_dim", f"C 列数 {t.C.shape[1]} != y 维数 {t.y_dim}")
    if t.senses.shape[0] != t.con_dim:
        report.add("template_dim", f"senses 长度 {t.senses.shape[0]} != 约束数 {t.con_dim}")
    elif set(np.unique(t.senses)) - set(VALID_SENSES):
        report.add("template_sense", "模板包含非法约束方向")
    if t.y_lower.shape[0] != t.y_dim or t.y_upper.shape[0] != t.y_dim:
        report.add("template_dim", "y 变量界长度与 y 维数不一致")
    elif np.any(t.y_lower > t.y_upper):
        report.add("template_bounds", "存在 y_lower > y_upper 的变量")

    # 主问题
    n = m.x_dim
    if m.A_x.shape[0] and m.A_x.shape[1] != n:
        report.add("master_dim", f"A_x 列数 {m.A_x.shape[1]} != x 维数 {n}")
    if m.b.shape[0] != m.n_rows or m.senses.shape[0] != m.n_rows:
        report.add("master_dim", "主问题 rhs/senses 长度与行数不一致")
    if m.x_lower.shape[0] != n or m.x_upper.shape[0] != n:
        report.add("master_dim", "主问题变量界长度与 x 维数不一致")
    else:
        if np.any(m.x_lower > m.x_upper):
            report.add("master_bounds", "存在 x_lower > x_upper 的主变量")
        if not (np.all(np.isfinite(m.x_lower)) and np.all(np.isfinite(m.x_upper))):
            report.add("master_unbounded", "主变量缺少有限上下界，无法保证 𝒳 有界")

    # 节点
    if not problem.nodes:
        report.add("no_nodes", "问题不含决策节点")
    ids = [node.id for node in problem.nodes]
    if sorted(ids) != list(range(len(ids))) or ids != sorted(ids):
        report.add("node_ids", f"节点编号必须为按序排列的 0..{len(ids) - 1}")
    for node in problem.nodes:
        if not node.pi > 0:
            report.add("node_probability", f"节点 {node.id} 概率非正: {node.pi}")
        if node.c.shape != (t.cost_dim,):
            report.add("node_cost_dim", f"节点 {node.id} 成本向量长度 {node.c.shape} != C 行数 {t.cost_dim}")
        elif np.any(node.c < 0):
            report.add("node_cost_sign", f"节点 {node.id} 成本向量含负分量")
        if node.x_selector.shape != (t.x_dim, n):
            report.add(
                "node_selector_dim",
                f"节点 {node.id} 选择矩阵形状 {node.x_selector.shape} != ({t.x_dim}, {n})",
            )
    return report


def node_view(x: np.ndarray, node: DecisionNode) -> np.ndarray:
    """
    提取节点视图 x_i = S_i x

    Args:
        x: 主变量向量
        node: 决策节点

    Returns:
        x_i 向量
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != node.x_selector.shape[1]:
        raise DimensionError(f"主变量长度 {x.shape} 与节点 {node.id} 选择矩阵列数 {node.x_selector.shape[1]} 不一致")
    return node.x_selector @ x
