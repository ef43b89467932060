"""
运行产物核查

对每个含 trace.csv 的目录检查:
- L* 单调不减，U* 单调不增
- 稳定化运行中 LMP 解的割模型值不超过目标 T
- summary.json 中的最终间隙与由 trace 重算的值一致
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

import numpy as np
from loguru import logger

from decomposition.results import relative_gap
from .artifacts import read_summary, read_trace

MONOTONE_TOL = 1e-9
LEVEL_TOL = 1e-6
GAP_TOL = 1e-12


@dataclass
class VerifyReport:
    checked: List[Path] = field(default_factory=list)
    issues: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(self.checked) and not self.issues


def _tolerance(values: np.ndarray, rel: float) -> np.ndarray:
    finite = np.where(np.isfinite(values), np.abs(values), 0.0)
    return rel * (1.0 + finite)


def check_trace(df, label: str = "") -> List[str]:
    """检查单个 trace 的界单调性与水平可行性"""
    issues = []
    L = df["L_star"].to_numpy(dtype=float)
    U = df["U_star"].to_numpy(dtype=float)
    if L.size > 1:
        drops = np.flatnonzero(L[1:] < L[:-1] - _tolerance(L[:-1], MONOTONE_TOL))
        issues.extend(f"{label}: 第 {df['iter'].iloc[k + 1]} 次迭代 L* 下降" for k in drops)
        with np.errstate(invalid="ignore"):
            rises = np.flatnonzero(U[1:] > U[:-1] + _tolerance(U[:-1], MONOTONE_TOL))
        issues.extend(f"{label}: 第 {df['iter'].iloc[k + 1]} 次迭代 U* 上升" for k in rises)

    level = df["level_value"].to_numpy(dtype=float)
    target = df["target"].to_numpy(dtype=float)
    mask = np.isfinite(level) & np.isfinite(target)
    excess = level[mask] - target[mask] - _tolerance(target[mask], LEVEL_TOL)
    for k in np.flatnonzero(excess > 0):
        it = df["iter"].to_numpy()[mask][k]
        issues.append(f"{label}: 第 {it} 次迭代水平值超过目标 {excess[k]:.3g}")
    return issues


def check_summary(df, summary: dict, label: str = "") -> List[str]:
    """summary 的最终界与间隙须与 trace 最后一行一致"""
    if df.empty:
        return []
    last = df.iloc[-1]
    gap = relative_gap(float(last["U_star"]), float(last["L_star"]))
    reported = float(summary.get("gap", math.nan))
    if math.isinf(gap) and math.isinf(reported):
        return []
    if not abs(gap - reported) <= GAP_TOL:
        return [f"{label}: summary 间隙 {reported!r} 与 trace 重算值 {gap!r} 不一致"]
    return []


def verify_directory(root) -> VerifyReport:
    """
    递归核查目录下全部运行产物

    Args:
        root: 输出目录

    Returns:
        VerifyReport；未发现任何 trace.csv 时 ok 为 False
    """
    root = Path(root)
    report = VerifyReport()
    for trace_path in sorted(root.rglob("trace.csv")):
        label = str(trace_path.parent.relative_to(root)) if trace_path.parent != root else root.name
        try:
            df = read_trace(trace_path)
        except ValueError as e:
            report.issues.append(f"{label}: {e}")
            continue
        report.checked.append(trace_path)
        report.issues.extend(check_trace(df, label))
        summary_path = trace_path.parent / "summary.json"
        if summary_path.exists():
            report.issues.extend(check_summary(df, read_summary(summary_path), label))
        else:
            report.issues.append(f"{label}: 缺少 summary.json")

    for issue in report.issues:
        logger.error(issue)
    logger.info(f"核查完成: {len(report.checked)} 个运行, {len(report.issues)} 个问题")
    return report
