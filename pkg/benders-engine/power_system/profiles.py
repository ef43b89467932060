"""
运行曲线

CSV 列: period, slice, H_t, pi_t, demand_<区域>, cf_<曲线名>
同一 slice 的时段连续排列，储能与爬坡约束只在 slice 内部相连。
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from config import config
from core.exceptions import InstanceParseError, InstanceValidationError

DEMAND_PREFIX = "demand_"
CF_PREFIX = "cf_"


@dataclass
class OperationalProfile:
    """代表性运行时段数据"""
    hours: np.ndarray
    weights: np.ndarray
    slice_of: np.ndarray
    demand: Dict[str, np.ndarray] = field(default_factory=dict)
    capacity_factors: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_periods(self) -> int:
        return self.hours.shape[0]

    @property
    def slices(self) -> List[np.ndarray]:
        """按出现顺序返回每个 slice 的时段下标"""
        order = list(dict.fromkeys(self.slice_of.tolist()))
        return [np.flatnonzero(self.slice_of == s) for s in order]

    @property
    def annual_weights(self) -> np.ndarray:
        """π_t·H_t"""
        return self.weights * self.hours

    @property
    def represented_hours(self) -> float:
        return float(np.sum(self.annual_weights))

    def energy(self, region: str) -> float:
        return float(self.annual_weights @ self.demand[region])

    def normalised(self, hours_per_year: float = None) -> "OperationalProfile":
        """缩放权重使 Σπ_t H_t 等于年小时数"""
        hours_per_year = hours_per_year or config.hours_per_year
        factor = hours_per_year / self.represented_hours
        return OperationalProfile(self.hours.copy(), self.weights * factor, self.slice_of.copy(),
                                  dict(self.demand), dict(self.capacity_factors))

    def scaled_demand(self, shares: Dict[str, float], source: str) -> "OperationalProfile":
        """按比例从 source 区域拆分出多个区域的需求"""
        demand = {region: share * self.demand[source] for region, share in shares.items()}
        return OperationalProfile(self.hours.copy(), self.weights.copy(), self.slice_of.copy(),
                                  demand, dict(self.capacity_factors))

    def validate(self, regions: Sequence[str], profile_names: Sequence[str], hours_per_year: float = None) -> None:
        """
        校验曲线完整性，失败时抛出 InstanceValidationError
        """
        hours_per_year = hours_per_year or config.hours_per_year
        issues = []
        n = self.n_periods
        if n == 0:
            issues.append("运行曲线不含任何时段")
        if np.any(self.hours <= 0) or np.any(self.weights < 0):
            issues.append("H_t 必须为正，pi_t 必须非负")
        for s in self.slices:
            if s.size and np.any(np.diff(s) != 1):
                issues.append("同一 slice 的时段必须连续")
                break
        if n and abs(self.represented_hours - hours_per_year) > 1e-6 * hours_per_year:
            issues.append(f"Σπ_t·H_t = {self.represented_hours:.3f} 与年小时数 {hours_per_year} 不一致")
        for region in regions:
            series = self.demand.get(region)
            if series is None:
                issues.append(f"缺少区域 {region} 的需求列 {DEMAND_PREFIX}{region}")
            elif np.any(series < 0):
                issues.append(f"区域 {region} 的需求为负")
        for name in profile_names:
            series = self.capacity_factors.get(name)
            if series is None:
                issues.append(f"缺少出力曲线列 {CF_PREFIX}{name}")
            elif np.any(series < 0) or np.any(series > 1):
                issues.append(f"出力曲线 {name} 超出 [0, 1]")
        if issues:
            raise InstanceValidationError("运行曲线校验失败: " + "; ".join(issues), locations=["profiles"])

    def to_frame(self) -> pd.DataFrame:
        data = {
            "period": np.arange(self.n_periods),
            "slice": self.slice_of,
            "H_t": self.hours,
            "pi_t": self.weights,
        }
        for region, series in self.demand.items():
            data[f"{DEMAND_PREFIX}{region}"] = series
        for name, series in self.capacity_factors.items():
            data[f"{CF_PREFIX}{name}"] = series
        return pd.DataFrame(data)

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "OperationalProfile":
        missing = [c for c in ("H_t", "pi_t") if c not in df.columns]
        if missing:
            raise InstanceValidationError(f"运行曲线缺少列: {missing}", locations=["profiles"])
        if "period" in df.columns:
            df = df.sort_values("period", kind="stable")
        slice_of = df["slice"].to_numpy(dtype=int) if "slice" in df.columns else np.zeros(len(df), dtype=int)
        demand = {c[len(DEMAND_PREFIX):]: df[c].to_numpy(dtype=float) for c in df.columns if c.startswith(DEMAND_PREFIX)}
        cfs = {c[len(CF_PREFIX):]: df[c].to_numpy(dtype=float) for c in df.columns if c.startswith(CF_PREFIX)}
        return cls(
            hours=df["H_t"].to_numpy(dtype=float),
            weights=df["pi_t"].to_numpy(dtype=float),
            slice_of=slice_of,
            demand=demand,
            capacity_factors=cfs,
        )


def load_profile_csv(path) -> OperationalProfile:
    """读取运行曲线CSV"""
    path = Path(path)
    if not path.exists():
        raise InstanceParseError(f"运行曲线文件不存在: {path}")
    try:
        df = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InstanceParseError(f"运行曲线CSV解析失败: {path} - {e}")
    return OperationalProfile.from_frame(df)


def save_profile_csv(profile: OperationalProfile, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    profile.to_frame().to_csv(path, index=False, float_format="%.12g")
    return path
