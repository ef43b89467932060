"""
运行产物读写

每次运行写出 trace.csv（固定列顺序，见 TRACE_COLUMNS）与 summary.json；
批量运行额外写出 comparison.csv 与 gamma_summary.csv。
"""
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from decomposition.results import TRACE_COLUMNS, RunResult

TIMING_COLUMNS = ("wall_time_s", "solver_time_s", "oracle_time_s")
COMPARISON_COLUMNS = [
    "instance",
    "engine",
    "label",
    "eps",
    "gamma",
    "dynamic",
    "status",
    "iterations",
    "exact_evaluations",
    "wall_time_s",
    "speed_up",
    "final_L",
    "final_U",
    "gap",
    "best_gap",
    "path_length",
    "failure",
]


def trace_frame(result: RunResult, no_timing: bool = False) -> pd.DataFrame:
    df = pd.DataFrame([r.as_row() for r in result.records], columns=TRACE_COLUMNS)
    if no_timing:
        for column in TIMING_COLUMNS:
            df[column] = 0.0
    return df


def write_trace(result: RunResult, path, no_timing: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(result, no_timing).to_csv(path, index=False)
    return path


def read_trace(path) -> pd.DataFrame:
    """读取 trace.csv，校验列顺序"""
    df = pd.read_csv(path, float_precision="round_trip")
    if list(df.columns) != TRACE_COLUMNS:
        raise ValueError(f"trace 列顺序不符: {list(df.columns)}")
    return df


def summary_payload(result: RunResult, instance: str = "", no_timing: bool = False) -> Dict[str, Any]:
    payload = {"instance": instance}
    payload.update(result.summary())
    if no_timing:
        payload["wall_time_s"] = 0.0
    return payload


def write_summary(result: RunResult, path, instance: str = "", no_timing: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = summary_payload(result, instance, no_timing)
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")
    return path


def read_summary(path) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_run(result: RunResult, run_dir, instance: str = "", no_timing: bool = False) -> Path:
    """写出单次运行的 trace.csv 与 summary.json"""
    run_dir = Path(run_dir)
    write_trace(result, run_dir / "trace.csv", no_timing)
    write_summary(result, run_dir / "summary.json", instance, no_timing)
    logger.debug(f"运行产物已写出: {run_dir}")
    return run_dir


def _comparison_row(outcome, instance: str, no_timing: bool) -> Dict[str, Any]:
    spec = outcome.spec
    row = {
        "instance": instance,
        "engine": spec.engine,
        "label": spec.label,
        "eps": spec.eps,
        "gamma": math.nan if spec.gamma is None else spec.gamma,
        "dynamic": spec.dynamic,
    }
    result: Optional[RunResult] = outcome.result
    if result is None:
        row.update({"status": "Error", "failure": outcome.error})
        return row
    row.update({
        "status": result.status.value,
        "iterations": result.iterations,
        "exact_evaluations": result.exact_evaluations,
        "wall_time_s": 0.0 if no_timing else result.wall_time_s,
        "final_L": result.lower_bound,
        "final_U": result.upper_bound,
        "gap": result.gap,
        "best_gap": result.best_gap,
        "path_length": result.path_length,
        "failure": result.failure,
    })
    return row


def comparison_frame(outcomes: List, instance: str = "", no_timing: bool = False) -> pd.DataFrame:
    """
    对比表: 每个 (引擎, eps, γ, 动态) 一行

    speed_up = 同 eps 下标准Benders耗时 / 本行耗时；无标准Benders或无计时时为 NaN
    """
    df = pd.DataFrame([_comparison_row(o, instance, no_timing) for o in outcomes])
    df = df.reindex(columns=COMPARISON_COLUMNS)
    baseline = df[(df["engine"] == "standard") & (df["status"] != "Error")].groupby("eps")["wall_time_s"].first()
    reference = df["eps"].map(baseline)
    with np.errstate(divide="ignore", invalid="ignore"):
        df["speed_up"] = np.where(df["wall_time_s"] > 0, reference / df["wall_time_s"], np.nan)
    return df


def write_comparison(outcomes: List, out_dir, instance: str = "", no_timing: bool = False) -> Path:
    path = Path(out_dir) / "comparison.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    df = comparison_frame(outcomes, instance, no_timing)
    df.to_csv(path, index=False)
    logger.info(f"对比表已写出: {path}")
    return path


def gamma_summary_frame(comparison: pd.DataFrame) -> pd.DataFrame:
    """按 (γ, 动态) 统计各 eps 下迭代次数与精确求解次数的均值、标准差"""
    rows = comparison[(comparison["engine"] == "stabilised") & (comparison["status"] != "Error")]
    grouped = rows.groupby(["gamma", "dynamic"], sort=True).agg(
        runs=("iterations", "size"),
        iterations_mean=("iterations", "mean"),
        iterations_std=("iterations", "std"),
        evaluations_mean=("exact_evaluations", "mean"),
        evaluations_std=("exact_evaluations", "std"),
    )
    return grouped.reset_index()


def write_gamma_summary(comparison_path, out_dir) -> Path:
    comparison = pd.read_csv(comparison_path)
    path = Path(out_dir) / "gamma_summary.csv"
    gamma_summary_frame(comparison).to_csv(path, index=False)
    logger.info(f"γ 统计表已写出: {path}")
    return path


def write_json(payload: Dict[str, Any], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")
    return path
