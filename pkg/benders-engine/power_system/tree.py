"""
多时间尺度情景树

投资节点与运行节点一一对应: 节点 i 的运行问题使用 i 及其祖先上的、仍在寿命内的投资。
各长期不确定参数在每个阶段独立分支，子节点取值 = 父节点取值 × 因子，
同一父节点下的子节点为各参数因子的笛卡尔积，等概率。
"""
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from config import config
from core.exceptions import InstanceValidationError
from .schema import TreeSpec

PARAMETERS = ("co2_budget", "demand_scale", "co2_tax")


@dataclass(frozen=True)
class TreeNode:
    id: int
    stage: int
    parent: Optional[int]
    probability: float
    discount: float
    years: float
    co2_budget: float
    demand_scale: float
    co2_tax: float
    path: Tuple[int, ...]

    def realisation(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in PARAMETERS}


@dataclass
class MultiHorizonTree:
    nodes: List[TreeNode]
    kappa: float
    discount_rate: float
    children: Dict[int, List[int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def n_stages(self) -> int:
        return max(node.stage for node in self.nodes) + 1

    def stage_nodes(self, stage: int) -> List[TreeNode]:
        return [node for node in self.nodes if node.stage == stage]

    def stage_counts(self) -> List[int]:
        return [len(self.stage_nodes(s)) for s in range(self.n_stages)]

    @property
    def is_deterministic(self) -> bool:
        """只有一个长期情景"""
        return all(count == 1 for count in self.stage_counts())

    @property
    def max_tax(self) -> float:
        return max(node.co2_tax for node in self.nodes)

    def ancestors(self, node_id: int) -> Tuple[int, ...]:
        """根到自身的路径（含自身）"""
        return self.nodes[node_id].path

    def alive_installs(self, node_id: int, lifetime: float) -> List[int]:
        """在节点 node_id 仍在寿命内的投资节点: κ(s − s0) ≤ H_P"""
        node = self.nodes[node_id]
        return [
            i0 for i0 in node.path
            if self.kappa * (node.stage - self.nodes[i0].stage) <= lifetime
        ]

    def check(self) -> None:
        for s in range(self.n_stages):
            total = sum(node.probability for node in self.stage_nodes(s))
            if abs(total - 1.0) > 1e-9:
                raise InstanceValidationError(f"阶段 {s} 节点概率和为 {total}", locations=["tree"])

    def expected_value_tree(self) -> "MultiHorizonTree":
        """每阶段取概率加权平均实现值，得到单情景链"""
        nodes = []
        for s in range(self.n_stages):
            members = self.stage_nodes(s)
            probs = np.array([node.probability for node in members])
            means = {
                name: float(probs @ np.array([getattr(node, name) for node in members]))
                for name in PARAMETERS
            }
            nodes.append(TreeNode(
                id=s,
                stage=s,
                parent=s - 1 if s > 0 else None,
                probability=1.0,
                discount=members[0].discount,
                years=members[0].years,
                path=tuple(range(s + 1)),
                **means,
            ))
        children = {s: [s + 1] for s in range(self.n_stages - 1)}
        children[self.n_stages - 1] = []
        return MultiHorizonTree(nodes=nodes, kappa=self.kappa, discount_rate=self.discount_rate, children=children)


def build_tree(spec: TreeSpec, discount_rate: Optional[float] = None) -> MultiHorizonTree:
    """
    构造情景树

    Args:
        spec: 树参数（阶段数、各参数根值与分支因子、阶段间隔 κ）
        discount_rate: 年折现率，默认读取配置

    Returns:
        MultiHorizonTree，节点按阶段广度优先编号
    """
    rate = config.discount_rate if discount_rate is None else discount_rate
    params = {name: getattr(spec, name) for name in PARAMETERS}
    for name, param in params.items():
        if not param.outcomes:
            raise InstanceValidationError(f"不确定参数 {name} 的分支列表为空", locations=[f"tree.{name}.outcomes"])
    branches = list(itertools.product(*[params[name].outcomes for name in PARAMETERS]))

    def discount(stage: int) -> float:
        return float((1.0 + rate) ** (-spec.kappa * stage))

    root = TreeNode(
        id=0, stage=0, parent=None, probability=1.0, discount=1.0, years=0.0,
        path=(0,), **{name: params[name].root for name in PARAMETERS},
    )
    nodes = [root]
    children: Dict[int, List[int]] = {0: []}
    frontier = [root]
    for stage in range(1, spec.stages):
        next_frontier = []
        for parent in frontier:
            for factors in branches:
                node_id = len(nodes)
                values = {name: getattr(parent, name) * factor for name, factor in zip(PARAMETERS, factors)}
                node = TreeNode(
                    id=node_id,
                    stage=stage,
                    parent=parent.id,
                    probability=parent.probability / len(branches),
                    discount=discount(stage),
                    years=spec.kappa * stage,
                    path=parent.path + (node_id,),
                    **values,
                )
                nodes.append(node)
                children[parent.id].append(node_id)
                children[node_id] = []
                next_frontier.append(node)
        frontier = next_frontier

    tree = MultiHorizonTree(nodes=nodes, kappa=spec.kappa, discount_rate=rate, children=children)
    tree.check()
    logger.debug(f"情景树构造完成: 各阶段节点数 {tree.stage_counts()}, 共 {len(tree)} 个节点")
    return tree
