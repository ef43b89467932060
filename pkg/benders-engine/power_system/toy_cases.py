"""
示例实例生成

- Case A: 单区域，OCGT + Diesel，一次性投资
- Case B: 两个互不相连区域（A 的 60% / 40%），共享碳排放上限
- Case C: Case B + 初始容量为 0 的可投资联络线（最优不建设）
- synthetic_tree: 多区域、多技术、多阶段情景树，用于规模测试
"""
from typing import Dict, List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, Field

from config import config
from problem.structured_problem import StructuredProblem
from .instance import PowerSystemModel, build_model
from .profiles import OperationalProfile
from .schema import (
    EconomicsSpec,
    InstanceDocument,
    ProfileSpec,
    TechnologyData,
    TreeSpec,
    UncertainParameter,
)

CaseName = Literal["A", "B", "C", "case_a", "case_b", "case_c", "synthetic_tree"]
REGION_SHARES_B = {"R1": 0.6, "R2": 0.4}
UNCERTAINTY_ORDER = ("demand_scale", "co2_budget", "co2_tax")


class ToyCaseParams(BaseModel):
    """实例生成参数"""
    periods: int = Field(default=24, ge=1)
    slices: int = Field(default=1, ge=1)
    peak_demand: float = Field(default=100.0, gt=0.0)
    co2_share: float = Field(default=0.55, ge=0.0, description="碳预算 = 系数 × 年用电量")
    seed: int = 0
    # synthetic_tree
    stages: int = Field(default=3, ge=1)
    branch: int = Field(default=3, ge=1)
    uncertainties: int = Field(default=1, ge=0, le=3)
    regions: int = Field(default=2, ge=1)
    storage: bool = True
    renewables: bool = True


def _slices(params: ToyCaseParams) -> List[np.ndarray]:
    return [s for s in np.array_split(np.arange(params.periods), params.slices) if s.size]


def base_profile(params: ToyCaseParams, regions: Dict[str, float], rng=None) -> OperationalProfile:
    """
    日负荷曲线: 每个 slice 为一个代表日，午间峰值

    Args:
        params: 生成参数
        regions: 区域 → 需求占比
        rng: 随机数发生器，为空时曲线完全确定
    """
    T = params.periods
    hours = np.zeros(T)
    weights = np.zeros(T)
    slice_of = np.zeros(T, dtype=int)
    shape = np.zeros(T)
    day_scale = 365.0 / len(_slices(params))
    for s, periods in enumerate(_slices(params)):
        length = periods.size
        hours[periods] = 24.0 / length
        weights[periods] = day_scale
        slice_of[periods] = s
        hour_of_day = (np.arange(length) + 0.5) * 24.0 / length
        season = 1.0 - 0.1 * s
        shape[periods] = season * (0.6 + 0.4 * np.sin(np.pi * hour_of_day / 24.0) ** 2)

    demand = {}
    for region, share in regions.items():
        series = params.peak_demand * share * shape
        if rng is not None:
            series = series * (1.0 + 0.05 * rng.standard_normal(T))
        demand[region] = np.maximum(series, 0.0)
    return OperationalProfile(hours=hours, weights=weights, slice_of=slice_of, demand=demand)


def _thermal(name: str, region: str, x_max: float, kind: str = "thermal", **overrides) -> TechnologyData:
    presets = {
        "OCGT": dict(c_inv=450.0, c_fix=10.0, c_op=0.060, emission_factor=0.50, lifetime=30),
        "Diesel": dict(c_inv=250.0, c_fix=8.0, c_op=0.120, emission_factor=0.70, lifetime=20),
        "CCS": dict(c_inv=1200.0, c_fix=25.0, c_op=0.050, emission_factor=0.05, ramp_rate=0.5, lifetime=30),
    }
    fields = dict(presets[name])
    fields.update(overrides)
    return TechnologyData(name=f"{name}_{region}", kind=kind, region=region, x_max=x_max, **fields)


def _co2_budget(profile: OperationalProfile, share: float) -> float:
    return share * sum(profile.energy(z) for z in profile.demand)


def case_document(which: str, params: ToyCaseParams = None) -> Tuple[InstanceDocument, OperationalProfile]:
    """
    生成 Case A/B/C 实例文档与运行曲线
    """
    params = params or ToyCaseParams()
    which = which.upper().replace("CASE_", "")
    if which not in ("A", "B", "C"):
        raise ValueError(f"未知的示例: {which}")

    shares = {"R1": 1.0} if which == "A" else dict(REGION_SHARES_B)
    profile = base_profile(params, shares)
    technologies = []
    for region, share in shares.items():
        x_max = 2.0 * params.peak_demand * share
        technologies.append(_thermal("OCGT", region, x_max))
        technologies.append(_thermal("Diesel", region, x_max))

    lines = []
    if which == "C":
        lines.append(TechnologyData(
            name="Line_R1_R2", kind="line", from_region="R1", to_region="R2",
            c_inv=60.0, c_fix=1.0, x_hist=0.0, x_max=params.peak_demand, lifetime=40,
        ))

    doc = InstanceDocument(
        name=f"case_{which.lower()}",
        regions=list(shares),
        technologies=technologies,
        lines=lines,
        profiles=ProfileSpec(path=f"case_{which.lower()}_profiles.csv"),
        tree=TreeSpec(stages=1, co2_budget=UncertainParameter(root=_co2_budget(profile, params.co2_share))),
        economics=EconomicsSpec(),
    )
    return doc, profile


def synthetic_document(params: ToyCaseParams = None) -> Tuple[InstanceDocument, OperationalProfile]:
    """
    生成多阶段合成实例

    不确定参数按 需求缩放、碳预算、碳税 的顺序取前 uncertainties 个，每个 branch 个分支；
    其余参数沿确定性趋势变化。
    """
    params = params or ToyCaseParams()
    rng = np.random.default_rng(params.seed)
    names = [f"R{k + 1}" for k in range(params.regions)]
    raw = rng.uniform(0.5, 1.5, size=len(names))
    shares = dict(zip(names, raw / raw.sum()))
    profile = base_profile(params, shares, rng)

    technologies, storage, lines = [], [], []
    for region, share in shares.items():
        peak = params.peak_demand * share
        technologies.append(_thermal("OCGT", region, 2.5 * peak, x_hist=round(0.3 * peak, 3)))
        technologies.append(_thermal("Diesel", region, 2.5 * peak))
        technologies.append(_thermal("CCS", region, 1.5 * peak, kind="thermal_ccs"))
        if params.renewables:
            profile_name = f"wind_{region}"
            technologies.append(TechnologyData(
                name=f"Wind_{region}", kind="renewable", region=region, profile=profile_name,
                c_inv=[1100.0, 950.0, 800.0], c_fix=30.0, x_max=3.0 * peak, lifetime=25,
            ))
            hour = np.arange(params.periods) % 24
            cf = 0.35 + 0.2 * np.cos(2 * np.pi * hour / 24.0) + 0.1 * rng.standard_normal(params.periods)
            profile.capacity_factors[profile_name] = np.clip(cf, 0.0, 1.0)
        if params.storage:
            storage.append(TechnologyData(
                name=f"Battery_{region}", kind="storage", region=region,
                c_inv=[400.0, 320.0, 250.0], c_fix=5.0, x_max=peak, lifetime=15,
                efficiency=0.9, power_ratio=4.0, charge_cost=0.001,
            ))
    for a, b in zip(names[:-1], names[1:]):
        lines.append(TechnologyData(
            name=f"Line_{a}_{b}", kind="line", from_region=a, to_region=b,
            c_inv=60.0, c_fix=1.0, x_max=params.peak_demand, lifetime=40,
        ))

    budget = _co2_budget(profile, params.co2_share)
    outcomes = {
        "demand_scale": np.linspace(1.0, 1.0 + 0.1 * (params.branch - 1), params.branch),
        "co2_budget": np.linspace(0.7, 1.0, params.branch) if params.branch > 1 else np.array([0.85]),
        "co2_tax": np.linspace(1.0, 2.0, params.branch) if params.branch > 1 else np.array([1.5]),
    }
    trend = {"demand_scale": [1.05], "co2_budget": [0.85], "co2_tax": [1.5]}
    uncertain = set(UNCERTAINTY_ORDER[: params.uncertainties])
    tree_params = {
        name: UncertainParameter(
            root=root,
            outcomes=[float(v) for v in outcomes[name]] if name in uncertain else trend[name],
        )
        for name, root in (("demand_scale", 1.0), ("co2_budget", budget), ("co2_tax", 0.02))
    }

    doc = InstanceDocument(
        name=f"synthetic_s{params.stages}_b{params.branch}_u{params.uncertainties}",
        regions=names,
        technologies=technologies,
        storage=storage,
        lines=lines,
        profiles=ProfileSpec(path="profiles.csv"),
        tree=TreeSpec(stages=params.stages, kappa=config.kappa, **tree_params),
        economics=EconomicsSpec(),
    )
    return doc, profile


def instance_document(which: str, params: ToyCaseParams = None) -> Tuple[InstanceDocument, OperationalProfile]:
    """按名称生成实例文档"""
    if which == "synthetic_tree":
        return synthetic_document(params)
    return case_document(which, params)


def toy_case_model(which: str, params: ToyCaseParams = None) -> PowerSystemModel:
    doc, profile = instance_document(which, params)
    return build_model(doc, profile)


def generate_toy_case(which: str, params: ToyCaseParams = None) -> StructuredProblem:
    """
    生成示例结构化问题

    Args:
        which: A/B/C（或 case_a 等）、synthetic_tree
        params: 生成参数

    Returns:
        StructuredProblem
    """
    return toy_case_model(which, params).problem
