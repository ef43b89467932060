"""
实验配置

一个实验 = 一个实例 × 引擎集合 × eps 列表 × γ 网格（稳定化引擎）
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from config import config

EngineName = Literal["standard", "adaptive", "adaptive-select", "stabilised"]
ENGINE_NAMES = ("standard", "adaptive", "adaptive-select", "stabilised")


@dataclass(frozen=True)
class RunSpec:
    """单次运行参数"""
    engine: str
    eps: float
    gamma: Optional[float] = None
    dynamic: bool = False

    @property
    def label(self) -> str:
        parts = [self.engine, f"eps{self.eps:g}"]
        if self.gamma is not None:
            parts.append(f"{'dyn' if self.dynamic else 'g'}{self.gamma:g}")
        return "_".join(parts)


class ExperimentConfig(BaseModel):
    """实验配置"""
    instance: Optional[Path] = None
    engines: List[EngineName] = Field(default_factory=lambda: ["standard", "adaptive", "stabilised"], min_length=1)
    eps: List[float] = Field(default_factory=lambda: [config.default_eps], min_length=1)
    gammas: List[float] = Field(default_factory=lambda: [config.gamma])
    dynamic: bool = False
    # 动态 γ 的初始值列表，为空时沿用 gammas
    gamma0_list: List[float] = Field(default_factory=list)
    omega: float = Field(default_factory=lambda: config.omega, gt=0.0, lt=1.0)
    p_low: float = Field(default_factory=lambda: config.p_low, gt=0.0, lt=1.0)
    p_high: float = Field(default_factory=lambda: config.p_high, gt=0.0, lt=1.0)
    seed: int = 0
    threads: int = Field(default_factory=lambda: config.threads, ge=1)
    parallel_runs: int = Field(default=1, ge=1)
    iter_limit: int = Field(default_factory=lambda: config.iteration_limit, ge=1)
    output_dir: Path = Field(default_factory=lambda: Path(config.output_dir))
    no_timing: bool = False
    checkpoint: Optional[Path] = None
    audit_samples: int = Field(default=0, ge=0)

    @field_validator("eps")
    @classmethod
    def check_eps(cls, v):
        if any(e <= 0 for e in v):
            raise ValueError("eps 必须为正")
        return v

    @field_validator("gammas", "gamma0_list")
    @classmethod
    def check_gammas(cls, v):
        if any(not 0.0 <= g <= 1.0 for g in v):
            raise ValueError("γ 必须位于 [0, 1]")
        return v

    @model_validator(mode="after")
    def check_grid(self):
        if not self.p_low < self.p_high:
            raise ValueError(f"p_low ({self.p_low}) 必须小于 p_high ({self.p_high})")
        if "stabilised" in self.engines and not self.gammas and not self.dynamic:
            raise ValueError("稳定化引擎至少需要一个 γ")
        return self

    def run_specs(self) -> List[RunSpec]:
        """展开为运行列表，顺序: eps → 引擎 → γ"""
        specs = []
        for eps in self.eps:
            for engine in self.engines:
                if engine != "stabilised":
                    specs.append(RunSpec(engine, eps))
                    continue
                specs.extend(RunSpec(engine, eps, gamma) for gamma in self.gammas)
                if self.dynamic:
                    specs.extend(RunSpec(engine, eps, g0, dynamic=True)
                                 for g0 in (self.gamma0_list or self.gammas))
        return specs
