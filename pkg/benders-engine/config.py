"""
分解引擎配置
"""
from typing import Optional
from pydantic import Field
from pydantic_settings import BaseSettings


class EngineSettings(BaseSettings):
    """分解引擎配置"""

    # 基础配置
    debug: bool = Field(default=False, env="DEBUG")
    log_level: str = Field(default="INFO", env="LOG_LEVEL")
    log_file: Optional[str] = Field(default=None, env="LOG_FILE")

    # 求解器后端
    lp_backend: str = Field(default="highs-ds", env="LP_BACKEND")
    qp_solver: str = Field(default="CLARABEL", env="QP_SOLVER")
    feasibility_tol: float = Field(default=1e-8, env="FEASIBILITY_TOL")
    optimality_tol: float = Field(default=1e-8, env="OPTIMALITY_TOL")
    qp_relaxed_tol: float = Field(default=1e-6, env="QP_RELAXED_TOL")
    lp_dump_dir: Optional[str] = Field(default=None, env="LP_DUMP_DIR")
    monolithic_nonzero_cap: int = Field(default=5_000_000, env="MONOLITHIC_NONZERO_CAP")

    # 算法参数
    iteration_limit: int = Field(default=5000, env="ITERATION_LIMIT")
    default_eps: float = Field(default=1.0, env="DEFAULT_EPS")
    gamma: float = Field(default=0.025, env="GAMMA")
    omega: float = Field(default=0.5, env="OMEGA")
    p_low: float = Field(default=0.1, env="P_LOW")
    p_high: float = Field(default=0.9, env="P_HIGH")
    gamma_min: float = Field(default=1e-4, env="GAMMA_MIN")
    gamma_max: float = Field(default=0.999, env="GAMMA_MAX")
    duplicate_tol: float = Field(default=1e-10, env="DUPLICATE_TOL")
    seed_strategy: str = Field(default="infimum", env="SEED_STRATEGY")
    threads: int = Field(default=1, env="THREADS")

    # 电力系统模型
    discount_rate: float = Field(default=0.05, env="DISCOUNT_RATE")
    kappa: float = Field(default=5.0, env="KAPPA")
    shed_penalty_factor: float = Field(default=10.0, env="SHED_PENALTY_FACTOR")
    hours_per_year: float = Field(default=8760.0, env="HOURS_PER_YEAR")

    # 输出
    output_dir: str = Field(default="runs", env="OUTPUT_DIR")

    class Config:
        env_file = ".env"
        case_sensitive = False


# 全局配置实例
config = EngineSettings()
