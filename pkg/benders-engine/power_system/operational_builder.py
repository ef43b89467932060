"""
运行子问题模板

每个运行节点共享的 LP（各时段 t 的变量）:
  pg[g,t] 火电出力, fl[l,t] 线路潮流(自由), sc/sd[s,t] 储能充/放电, q[s,t] 储能电量,
  shed[z,t] 切负荷, gshed[z,t] 弃电
节点视图 x_i = (各技术累计容量, −需求缩放, 碳预算)

成本映射 C 两行: 运行成本 Σπ_tH_t(C_op pg + C_S sc + C_shed shed) 与排放 Σπ_tH_t E pg；
节点成本向量 κδ(1, 碳税) 使碳税按排放因子统一计入。
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from loguru import logger

from config import config
from problem.structured_problem import SubproblemTemplate
from .profiles import OperationalProfile
from .schema import THERMAL_KINDS, InstanceDocument
from .topology import GridTopology

COST_ROWS = ("operating_cost", "emissions")


@dataclass
class OperationalLayout:
    """子问题变量与行下标映射"""
    n_periods: int
    tech_names: List[str]
    regions: List[str]
    pg: Dict[str, np.ndarray] = field(default_factory=dict)
    fl: Dict[str, np.ndarray] = field(default_factory=dict)
    sc: Dict[str, np.ndarray] = field(default_factory=dict)
    sd: Dict[str, np.ndarray] = field(default_factory=dict)
    q: Dict[str, np.ndarray] = field(default_factory=dict)
    shed: Dict[str, np.ndarray] = field(default_factory=dict)
    gshed: Dict[str, np.ndarray] = field(default_factory=dict)
    balance_rows: Dict[str, np.ndarray] = field(default_factory=dict)
    co2_row: int = -1
    shed_penalty: float = 0.0

    def cap_column(self, tech: str) -> int:
        return self.tech_names.index(tech)

    @property
    def demand_column(self) -> int:
        return len(self.tech_names)

    @property
    def co2_column(self) -> int:
        return len(self.tech_names) + 1


class _Builder:
    """逐行累积稀疏三元组"""

    def __init__(self):
        self.y_names: List[str] = []
        self.y_lower: List[float] = []
        self.y_upper: List[float] = []
        self.a = ([], [], [])
        self.b = ([], [], [])
        self.senses: List[str] = []
        self.row_names: List[str] = []

    def var(self, name: str, lower: float = 0.0, upper: float = np.inf) -> int:
        self.y_names.append(name)
        self.y_lower.append(lower)
        self.y_upper.append(upper)
        return len(self.y_names) - 1

    def row(self, name: str, a_terms, b_terms, sense: str = "<=") -> int:
        r = len(self.senses)
        for col, val in a_terms:
            self.a[0].append(r)
            self.a[1].append(col)
            self.a[2].append(val)
        for col, val in b_terms:
            self.b[0].append(r)
            self.b[1].append(col)
            self.b[2].append(val)
        self.senses.append(sense)
        self.row_names.append(name)
        return r


def default_shed_penalty(doc: InstanceDocument, max_tax: float) -> float:
    """切负荷惩罚 = 系数 × 最贵火电的边际成本（含碳税）"""
    costs = [t.c_op + max_tax * t.emission_factor for t in doc.technologies if t.kind in THERMAL_KINDS]
    base = max(costs) if costs else 0.0
    if base <= 0:
        base = 1.0
    return config.shed_penalty_factor * base


def build_subproblem_template(
    doc: InstanceDocument,
    topology: GridTopology,
    profile: OperationalProfile,
    max_tax: float = 0.0,
    shed_penalty: Optional[float] = None,
) -> Tuple[SubproblemTemplate, OperationalLayout]:
    """
    构造所有运行节点共享的子问题模板

    Args:
        doc: 实例文档
        topology: 电网拓扑
        profile: 运行曲线
        max_tax: 树上最大碳税（用于默认切负荷惩罚）
        shed_penalty: 显式切负荷惩罚

    Returns:
        (SubproblemTemplate, OperationalLayout)
    """
    techs = doc.all_technologies
    by_name = {t.name: t for t in techs}
    T = profile.n_periods
    w = profile.annual_weights
    H = profile.hours
    shed_cost = shed_penalty or doc.economics.shed_penalty or default_shed_penalty(doc, max_tax)

    layout = OperationalLayout(n_periods=T, tech_names=[t.name for t in techs], regions=list(doc.regions),
                               shed_penalty=shed_cost)
    bld = _Builder()
    cap = layout.cap_column
    d_col, e_col = layout.demand_column, layout.co2_column

    thermal = [t for t in doc.technologies if t.kind in THERMAL_KINDS]
    for g in thermal:
        layout.pg[g.name] = np.array([bld.var(f"pg[{g.name},{t}]") for t in range(T)])
    for line in doc.lines:
        layout.fl[line.name] = np.array([bld.var(f"fl[{line.name},{t}]", -np.inf, np.inf) for t in range(T)])
    for s in doc.storage:
        layout.sc[s.name] = np.array([bld.var(f"sc[{s.name},{t}]") for t in range(T)])
        layout.sd[s.name] = np.array([bld.var(f"sd[{s.name},{t}]") for t in range(T)])
        layout.q[s.name] = np.array([bld.var(f"q[{s.name},{t}]") for t in range(T)])
    for z in doc.regions:
        layout.shed[z] = np.array([bld.var(f"shed[{z},{t}]") for t in range(T)])
        layout.gshed[z] = np.array([bld.var(f"gshed[{z},{t}]") for t in range(T)])

    # 容量约束
    for g in thermal:
        for t in range(T):
            bld.row(f"gen_cap[{g.name},{t}]", [(layout.pg[g.name][t], 1.0)], [(cap(g.name), 1.0)])
    for line in doc.lines:
        for t in range(T):
            v = layout.fl[line.name][t]
            bld.row(f"flow_fwd[{line.name},{t}]", [(v, 1.0)], [(cap(line.name), 1.0)])
            bld.row(f"flow_bwd[{line.name},{t}]", [(v, -1.0)], [(cap(line.name), 1.0)])
    for s in doc.storage:
        for t in range(T):
            bld.row(f"charge_cap[{s.name},{t}]", [(layout.sc[s.name][t], 1.0)], [(cap(s.name), 1.0)])
            bld.row(f"discharge_cap[{s.name},{t}]", [(layout.sd[s.name][t], 1.0)], [(cap(s.name), 1.0)])
            bld.row(f"energy_cap[{s.name},{t}]", [(layout.q[s.name][t], 1.0)], [(cap(s.name), s.power_ratio)])

    # 爬坡: 只在同一 slice 内相邻时段之间
    slices = profile.slices
    for g in thermal:
        if g.ramp_rate >= 1.0:
            continue
        pg = layout.pg[g.name]
        for periods in slices:
            for prev, cur in zip(periods[:-1], periods[1:]):
                bld.row(f"ramp_up[{g.name},{cur}]", [(pg[cur], 1.0), (pg[prev], -1.0)], [(cap(g.name), g.ramp_rate)])
                bld.row(f"ramp_dn[{g.name},{cur}]", [(pg[prev], 1.0), (pg[cur], -1.0)], [(cap(g.name), g.ramp_rate)])

    # 功率平衡 (等式)
    for z in doc.regions:
        rows = []
        for t in range(T):
            a_terms = [(layout.pg[g][t], 1.0) for g in topology.thermal[z]]
            a_terms += [(layout.fl[l][t], 1.0) for l in topology.line_in[z]]
            a_terms += [(layout.fl[l][t], -1.0) for l in topology.line_out[z]]
            for s in topology.storage[z]:
                a_terms += [(layout.sd[s][t], 1.0), (layout.sc[s][t], -1.0)]
            a_terms += [(layout.shed[z][t], 1.0), (layout.gshed[z][t], -1.0)]
            b_terms = [(d_col, -float(profile.demand[z][t]))]
            for r in topology.renewable[z]:
                b_terms.append((cap(r), -float(profile.capacity_factors[by_name[r].profile][t])))
            rows.append(bld.row(f"balance[{z},{t}]", a_terms, b_terms, sense="=="))
        layout.balance_rows[z] = np.array(rows)

    # 储能电量递推，slice 首尾循环
    for s in doc.storage:
        q, sc, sd = layout.q[s.name], layout.sc[s.name], layout.sd[s.name]
        for periods in slices:
            nxt = np.roll(periods, -1)
            for cur, after in zip(periods, nxt):
                terms = [(sc[cur], -H[cur] * s.efficiency), (sd[cur], H[cur])]
                if after != cur:
                    terms += [(q[after], 1.0), (q[cur], -1.0)]
                bld.row(f"storage[{s.name},{cur}]", terms, [], sense="==")

    # 碳排放预算
    co2_terms = [
        (layout.pg[g.name][t], w[t] * g.emission_factor)
        for g in thermal if g.emission_factor > 0 for t in range(T)
    ]
    layout.co2_row = bld.row("co2_budget", co2_terms, [(e_col, 1.0)])

    n_y, n_rows, x_dim = len(bld.y_names), len(bld.senses), len(techs) + 2
    A = sp.csr_matrix((bld.a[2], (bld.a[0], bld.a[1])), shape=(n_rows, n_y))
    B = sp.csr_matrix((bld.b[2], (bld.b[0], bld.b[1])), shape=(n_rows, x_dim))

    # 成本映射
    cost_terms = []
    for g in thermal:
        for t in range(T):
            if g.c_op:
                cost_terms.append((0, layout.pg[g.name][t], w[t] * g.c_op))
            if g.emission_factor:
                cost_terms.append((1, layout.pg[g.name][t], w[t] * g.emission_factor))
    for s in doc.storage:
        if s.charge_cost:
            cost_terms += [(0, layout.sc[s.name][t], w[t] * s.charge_cost) for t in range(T)]
    for z in doc.regions:
        cost_terms += [(0, layout.shed[z][t], w[t] * shed_cost) for t in range(T)]
    c_rows, c_cols, c_vals = (list(v) for v in zip(*cost_terms)) if cost_terms else ([], [], [])
    C = sp.csr_matrix((c_vals, (c_rows, c_cols)), shape=(len(COST_ROWS), n_y))

    template = SubproblemTemplate.build(
        A, B, C,
        senses=np.array(bld.senses),
        y_lower=np.array(bld.y_lower),
        y_upper=np.array(bld.y_upper),
        y_names=bld.y_names,
        row_names=bld.row_names,
    )
    logger.debug(f"子问题模板构造完成: 变量 {n_y}, 约束 {n_rows}, 时段 {T}, 切负荷惩罚 {shed_cost:.4g}")
    return template, layout
