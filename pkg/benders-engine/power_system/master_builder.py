"""
投资主问题构造

主变量顺序:
  inst[p, n]  新增容量      ∈ [0, X_max − X_hist]
  acc[p, n]   累计可用容量  ∈ [X_hist, X_max]
  dem[n]      −需求缩放系数（固定）
  co2[n]      碳排放预算（固定）
约束: acc[p, n] − Σ_{n0 寿命内祖先} inst[p, n0] = X_hist
目标: Σ δπ C_inv inst + κ Σ δπ C_fix acc
节点视图: (acc[p, n] 按技术顺序, dem[n], co2[n])，成本向量 κδ_n·(1, 碳税_n)
"""
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.sparse as sp
from loguru import logger

from problem.structured_problem import DecisionNode, MasterBlock
from .schema import InstanceDocument
from .tree import MultiHorizonTree


@dataclass
class MasterLayout:
    master: MasterBlock
    tree: MultiHorizonTree
    tech_names: List[str]
    node_costs: np.ndarray
    selectors: List[np.ndarray]

    @property
    def n_tech(self) -> int:
        return len(self.tech_names)

    @property
    def n_nodes(self) -> int:
        return len(self.tree)

    def inst_index(self, p: int, n: int) -> int:
        return n * self.n_tech + p

    def acc_index(self, p: int, n: int) -> int:
        return self.n_nodes * self.n_tech + n * self.n_tech + p

    def dem_index(self, n: int) -> int:
        return 2 * self.n_nodes * self.n_tech + n

    def co2_index(self, n: int) -> int:
        return 2 * self.n_nodes * self.n_tech + self.n_nodes + n

    def root_install_indices(self) -> List[int]:
        return [self.inst_index(p, 0) for p in range(self.n_tech)]

    def decision_nodes(self) -> List[DecisionNode]:
        x_dim = self.master.x_dim
        return [
            DecisionNode.from_indices(n, node.probability, self.node_costs[n], self.selectors[n], x_dim,
                                      label=f"stage{node.stage}")
            for n, node in enumerate(self.tree.nodes)
        ]


def build_master(doc: InstanceDocument, tree: MultiHorizonTree) -> MasterLayout:
    """
    构造主问题块与节点选择

    Args:
        doc: 实例文档
        tree: 情景树

    Returns:
        MasterLayout
    """
    techs = doc.all_technologies
    P, N = len(techs), len(tree)
    kappa = tree.kappa
    x_dim = 2 * P * N + 2 * N

    f = np.zeros(x_dim)
    lower = np.zeros(x_dim)
    upper = np.zeros(x_dim)
    names = [""] * x_dim
    rows, cols, vals, rhs = [], [], [], []

    layout = MasterLayout(
        master=None, tree=tree, tech_names=[t.name for t in techs],
        node_costs=np.zeros((N, 2)), selectors=[],
    )

    for p, tech in enumerate(techs):
        if tech.lifetime < kappa:
            logger.warning(f"{tech.name} 寿命 {tech.lifetime} 年短于阶段间隔 {kappa} 年，投资在下一阶段前失效")

    for n, node in enumerate(tree.nodes):
        weight = node.discount * node.probability
        for p, tech in enumerate(techs):
            i = layout.inst_index(p, n)
            f[i] = weight * tech.inv_cost(node.stage)
            upper[i] = tech.x_max - tech.x_hist
            names[i] = f"inst[{tech.name},n{n}]"

            a = layout.acc_index(p, n)
            f[a] = kappa * weight * tech.c_fix
            lower[a], upper[a] = tech.x_hist, tech.x_max
            names[a] = f"acc[{tech.name},n{n}]"

            row = len(rhs)
            rows.append(row)
            cols.append(a)
            vals.append(1.0)
            for n0 in tree.alive_installs(n, tech.lifetime):
                rows.append(row)
                cols.append(layout.inst_index(p, n0))
                vals.append(-1.0)
            rhs.append(tech.x_hist)

        d = layout.dem_index(n)
        lower[d] = upper[d] = -node.demand_scale
        names[d] = f"dem[n{n}]"
        e = layout.co2_index(n)
        lower[e] = upper[e] = node.co2_budget
        names[e] = f"co2[n{n}]"

        layout.node_costs[n] = kappa * node.discount * np.array([1.0, node.co2_tax])
        layout.selectors.append(np.array([layout.acc_index(p, n) for p in range(P)] + [d, e]))

    A_x = sp.csr_matrix((vals, (rows, cols)), shape=(len(rhs), x_dim))
    layout.master = MasterBlock.build(
        f=f, A_x=A_x, senses=np.full(len(rhs), "=="), b=np.array(rhs, dtype=float),
        x_lower=lower, x_upper=upper, x_names=names,
    )
    logger.debug(f"主问题构造完成: 变量 {x_dim}, 约束 {len(rhs)}")
    return layout
