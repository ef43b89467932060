"""
割平面与割池

每个节点一个只增不减的割列表: β_i ≥ θ + λ'(x_i − x̂)
"""
import threading
from dataclasses import dataclass
from typing import List, Optional, Set, Tuple

import numpy as np
from loguru import logger

from config import config


@dataclass(frozen=True, eq=False)
class Cut:
    """单个割: 锚点 x̂、值 θ、次梯度 λ"""
    x_anchor: np.ndarray
    theta: float
    lam: np.ndarray
    exact: bool = True

    @property
    def intercept(self) -> float:
        """仿射形式 β ≥ λ'x_i + (θ − λ'x̂) 的常数项"""
        return float(self.theta - self.lam @ self.x_anchor)

    def value_at(self, x_i: np.ndarray) -> float:
        return float(self.theta + self.lam @ (x_i - self.x_anchor))

    def row_key(self, tol: float) -> bytes:
        """(λ, 常数项) 按容差取整后的散列键；锚点不同但仿射函数相同的割视为重复"""
        row = np.append(self.lam, self.intercept)
        # 加 0.0 把 −0.0 归一为 0.0
        return (np.rint(row / tol) + 0.0).tobytes()


class CutPool:
    """按节点组织的割池，带下界 β̲"""

    def __init__(self, node_count: int, floor: float = 0.0, dedup_tol: Optional[float] = None):
        self.node_count = node_count
        self.floor = floor
        self.dedup_tol = max(config.duplicate_tol if dedup_tol is None else dedup_tol, 1e-15)
        self._cuts: List[List[Cut]] = [[] for _ in range(node_count)]
        self._keys: List[Set[bytes]] = [set() for _ in range(node_count)]
        self._lock = threading.Lock()
        self.stats = {"added": 0, "duplicates": 0}

    def add(self, node_id: int, cut: Cut) -> bool:
        """
        添加割；与已有割重复（容差内）时跳过

        Returns:
            是否实际加入
        """
        key = cut.row_key(self.dedup_tol)
        with self._lock:
            if key in self._keys[node_id]:
                self.stats["duplicates"] += 1
                logger.debug(f"跳过重复割: 节点 {node_id}, θ={cut.theta:.6g}")
                return False
            self._keys[node_id].add(key)
            self._cuts[node_id].append(cut)
            self.stats["added"] += 1
            return True

    def cuts(self, node_id: int) -> Tuple[Cut, ...]:
        return tuple(self._cuts[node_id])

    def total_cuts(self) -> int:
        return sum(len(pool) for pool in self._cuts)

    def __len__(self) -> int:
        return self.total_cuts()

    def model_value(self, node_id: int, x_i: np.ndarray) -> float:
        """割模型在 x_i 处的值 max(β̲, max_k 割值)"""
        value = self.floor
        for cut in self._cuts[node_id]:
            value = max(value, cut.value_at(x_i))
        return value

    def snapshot(self) -> List[Tuple[Cut, ...]]:
        with self._lock:
            return [tuple(pool) for pool in self._cuts]
