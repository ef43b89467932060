"""
测试共享夹具
"""
import os
import sys

import numpy as np
import pytest

# 添加服务根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from backend.lp_backend import LPBackend
from power_system.toy_cases import ToyCaseParams, toy_case_model
from problem.structured_problem import DecisionNode, MasterBlock, StructuredProblem, SubproblemTemplate


def shed_problem(demands, probs=None, cap_max=4.0, cap_cost=1.0, shed_cost=3.0, name="shed"):
    """
    单容量切负荷问题

    x = (cap, dem_0, ..., dem_{N-1})，dem_n 固定为 −d_n
    子问题 y = (gen, shed): gen ≤ cap, gen + shed ≥ d, 成本 shed_cost·shed
    """
    n = len(demands)
    probs = [1.0 / n] * n if probs is None else probs
    template = SubproblemTemplate.build(
        A=[[1.0, 0.0], [-1.0, -1.0]],
        B=[[1.0, 0.0], [0.0, 1.0]],
        C=[[0.0, shed_cost]],
        senses=["<=", "<="],
    )
    dem = [-float(d) for d in demands]
    master = MasterBlock.build(
        f=[cap_cost] + [0.0] * n,
        x_lower=[0.0] + dem,
        x_upper=[cap_max] + dem,
    )
    nodes = [DecisionNode.from_indices(k, probs[k], [1.0], [0, 1 + k], n + 1) for k in range(n)]
    return StructuredProblem(master=master, template=template, nodes=nodes, name=name)


@pytest.fixture
def backend():
    return LPBackend()


@pytest.fixture
def single_node_problem():
    """最优值 7: cap = 4, shed = 1"""
    return shed_problem([5.0])


@pytest.fixture
def two_node_problem():
    """最优值 5.5: cap = 4，低需求节点不切负荷"""
    return shed_problem([3.0, 5.0])


@pytest.fixture
def small_params():
    return ToyCaseParams(periods=6)


@pytest.fixture
def case_a_model(small_params):
    return toy_case_model("A", small_params)


@pytest.fixture
def case_c_model(small_params):
    return toy_case_model("C", small_params)


@pytest.fixture
def tree_model():
    """3 阶段、每阶段 3 个分支的 13 节点实例"""
    params = ToyCaseParams(periods=4, stages=3, branch=3, uncertainties=1, regions=2, seed=7)
    return toy_case_model("synthetic_tree", params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
