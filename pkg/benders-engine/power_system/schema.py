"""
电力系统实例文档模型

JSON 顶层键: name, regions, technologies, lines, storage, profiles, tree, economics
单位: MW, MWh, 货币单位（默认千英镑）, 吨
"""
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from config import config

TechnologyKind = Literal["thermal", "thermal_ccs", "renewable", "storage", "line"]
GENERATION_KINDS = ("thermal", "thermal_ccs", "renewable")
THERMAL_KINDS = ("thermal", "thermal_ccs")


class TechnologyData(BaseModel):
    """技术参数（发电、储能、线路共用）"""
    name: str
    kind: TechnologyKind
    region: Optional[str] = None
    c_inv: Union[float, List[float]] = Field(description="各阶段单位投资成本 (货币/MW)")
    c_fix: float = Field(default=0.0, ge=0.0)
    x_hist: float = Field(default=0.0, ge=0.0)
    x_max: float = Field(ge=0.0)
    lifetime: int = Field(ge=1)
    # 火电
    c_op: float = Field(default=0.0, ge=0.0)
    emission_factor: float = Field(default=0.0, ge=0.0)
    ramp_rate: float = Field(default=1.0, gt=0.0, le=1.0)
    # 可再生
    profile: Optional[str] = None
    # 储能
    efficiency: float = Field(default=1.0, gt=0.0, le=1.0)
    power_ratio: float = Field(default=1.0, gt=0.0)
    charge_cost: float = Field(default=0.0, ge=0.0)
    # 线路
    from_region: Optional[str] = None
    to_region: Optional[str] = None

    @field_validator("c_inv")
    @classmethod
    def check_c_inv(cls, v):
        values = v if isinstance(v, list) else [v]
        if not values or any(c < 0 for c in values):
            raise ValueError("投资成本必须非空且非负")
        return v

    @model_validator(mode="after")
    def check_kind_fields(self):
        if self.x_hist > self.x_max:
            raise ValueError(f"{self.name}: x_hist ({self.x_hist}) 超过 x_max ({self.x_max})")
        if self.kind == "line":
            if not self.from_region or not self.to_region:
                raise ValueError(f"{self.name}: 线路必须指定 from_region/to_region")
            if self.from_region == self.to_region:
                raise ValueError(f"{self.name}: 线路两端不能是同一区域")
        elif not self.region:
            raise ValueError(f"{self.name}: 必须指定所在区域")
        if self.kind == "renewable" and not self.profile:
            raise ValueError(f"{self.name}: 可再生能源必须指定出力曲线 profile")
        return self

    def inv_cost(self, stage: int) -> float:
        """第 stage 阶段的单位投资成本；列表不足时沿用最后一个值"""
        if isinstance(self.c_inv, list):
            return float(self.c_inv[min(stage, len(self.c_inv) - 1)])
        return float(self.c_inv)

    def scaled(self, factor: float) -> "TechnologyData":
        c_inv = [c * factor for c in self.c_inv] if isinstance(self.c_inv, list) else self.c_inv * factor
        return self.model_copy(update={
            "c_inv": c_inv,
            "c_fix": self.c_fix * factor,
            "c_op": self.c_op * factor,
            "charge_cost": self.charge_cost * factor,
        })


class ProfileSpec(BaseModel):
    """运行曲线CSV路径（相对实例文件）"""
    path: str


class UncertainParameter(BaseModel):
    """
    长期参数: 根节点取值 root，每进入下一阶段乘以 outcomes 中的某个因子。
    outcomes 只有一个元素时为确定性趋势。
    """
    root: float = Field(ge=0.0)
    outcomes: List[float] = Field(default_factory=lambda: [1.0])


class TreeSpec(BaseModel):
    """多时间尺度情景树参数"""
    stages: int = Field(default=3, ge=1)
    kappa: float = Field(default_factory=lambda: config.kappa, gt=0.0)
    co2_budget: UncertainParameter
    demand_scale: UncertainParameter = Field(default_factory=lambda: UncertainParameter(root=1.0))
    co2_tax: UncertainParameter = Field(default_factory=lambda: UncertainParameter(root=0.0))


class EconomicsSpec(BaseModel):
    discount_rate: float = Field(default_factory=lambda: config.discount_rate, ge=0.0)
    shed_penalty: Optional[float] = Field(default=None, gt=0.0)
    hours_per_year: float = Field(default_factory=lambda: config.hours_per_year, gt=0.0)


class InstanceDocument(BaseModel):
    """实例文档"""
    name: str = "instance"
    regions: List[str] = Field(min_length=1)
    technologies: List[TechnologyData] = Field(default_factory=list)
    lines: List[TechnologyData] = Field(default_factory=list)
    storage: List[TechnologyData] = Field(default_factory=list)
    profiles: ProfileSpec
    tree: TreeSpec
    economics: EconomicsSpec = Field(default_factory=EconomicsSpec)

    @model_validator(mode="after")
    def check_references(self):
        if len(set(self.regions)) != len(self.regions):
            raise ValueError("区域名称重复")
        for tech in self.technologies:
            if tech.kind not in GENERATION_KINDS:
                raise ValueError(f"{tech.name}: technologies 中只允许发电技术，实际为 {tech.kind}")
        for tech in self.storage:
            if tech.kind != "storage":
                raise ValueError(f"{tech.name}: storage 中只允许储能，实际为 {tech.kind}")
        for tech in self.lines:
            if tech.kind != "line":
                raise ValueError(f"{tech.name}: lines 中只允许线路，实际为 {tech.kind}")
        names = [t.name for t in self.all_technologies]
        if len(set(names)) != len(names):
            raise ValueError("技术名称重复")
        regions = set(self.regions)
        for tech in self.all_technologies:
            for region in (tech.region, tech.from_region, tech.to_region):
                if region is not None and region not in regions:
                    raise ValueError(f"{tech.name}: 引用了未声明的区域 {region}")
        return self

    @property
    def all_technologies(self) -> List[TechnologyData]:
        """主变量与节点视图中的技术顺序: 发电、储能、线路"""
        return list(self.technologies) + list(self.storage) + list(self.lines)

    def scaled_costs(self, factor: float) -> "InstanceDocument":
        """所有货币参数乘以 factor（用于齐次性检查）"""
        tree = self.tree.model_copy(update={
            "co2_tax": self.tree.co2_tax.model_copy(update={"root": self.tree.co2_tax.root * factor}),
        })
        economics = self.economics.model_copy(update={
            "shed_penalty": None if self.economics.shed_penalty is None else self.economics.shed_penalty * factor,
        })
        return self.model_copy(update={
            "technologies": [t.scaled(factor) for t in self.technologies],
            "storage": [t.scaled(factor) for t in self.storage],
            "lines": [t.scaled(factor) for t in self.lines],
            "tree": tree,
            "economics": economics,
        })
