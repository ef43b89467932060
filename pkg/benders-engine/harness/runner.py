"""
实验运行器

- run_engine: 按名称运行单个引擎
- run_experiment: 按实验配置批量运行，单次失败记录后继续
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from loguru import logger
from tqdm import tqdm

from backend.lp_backend import LPBackend
from config import config
from core.exceptions import EngineError, InstanceValidationError
from decomposition.adaptive_benders import AdaptiveBenders, EngineConfig
from decomposition.adaptive_oracles import SolvedPointStore, load_checkpoint, save_checkpoint
from decomposition.level_set import StabilisationConfig
from decomposition.results import RunResult
from decomposition.standard_benders import StandardBenders
from problem.structured_problem import StructuredProblem
from .artifacts import write_comparison, write_gamma_summary, write_run
from .experiment import ENGINE_NAMES, ExperimentConfig, RunSpec


@dataclass
class RunOutcome:
    """批量运行中的单次结果；error 非空表示运行异常终止"""
    spec: RunSpec
    result: Optional[RunResult] = None
    error: Optional[str] = None
    run_dir: Optional[Path] = None


@dataclass
class ExperimentReport:
    outcomes: List[RunOutcome] = field(default_factory=list)
    comparison_path: Optional[Path] = None
    gamma_summary_path: Optional[Path] = None

    @property
    def failed(self) -> List[RunOutcome]:
        return [o for o in self.outcomes if o.error or (o.result and not o.result.converged)]


def stabilisation_for(spec: RunSpec, exp: ExperimentConfig) -> Optional[StabilisationConfig]:
    """为稳定化运行构造 γ 配置；γ = 0 时放开下界截断"""
    if spec.engine != "stabilised":
        return None
    gamma = config.gamma if spec.gamma is None else spec.gamma
    gamma_min = min(config.gamma_min, gamma)
    gamma_max = max(config.gamma_max, gamma)
    if spec.dynamic:
        gamma_min, gamma_max = config.gamma_min, config.gamma_max
        gamma = min(max(gamma, gamma_min), gamma_max)
    return StabilisationConfig(
        gamma0=gamma,
        dynamic=spec.dynamic,
        omega=exp.omega,
        p_low=exp.p_low,
        p_high=exp.p_high,
        gamma_min=gamma_min,
        gamma_max=gamma_max,
    )


def _load_store(path: Optional[Path], problem: StructuredProblem) -> Optional[SolvedPointStore]:
    if path is None or not Path(path).exists():
        return None
    try:
        store = load_checkpoint(path)
    except (ValueError, KeyError) as e:
        raise InstanceValidationError(f"检查点无效: {e}", locations=[str(path)])
    if store.seed_point.x.shape[0] != problem.template.x_dim:
        raise InstanceValidationError(
            f"检查点维度 {store.seed_point.x.shape[0]} 与实例节点视图维度 {problem.template.x_dim} 不一致",
            locations=[str(path)],
        )
    return store


def run_engine(
    spec: RunSpec,
    problem: StructuredProblem,
    exp: Optional[ExperimentConfig] = None,
    backend: Optional[LPBackend] = None,
    save_store: bool = False,
) -> RunResult:
    """
    运行单个引擎

    Args:
        spec: 运行参数（引擎名、eps、γ、是否动态）
        problem: 结构化问题
        exp: 实验配置（线程数、迭代上限、动态 γ 参数、检查点）
        backend: 求解后端，默认新建
        save_store: 自适应运行结束后是否把点集写回检查点

    Returns:
        RunResult
    """
    if spec.engine not in ENGINE_NAMES:
        raise ValueError(f"未知引擎: {spec.engine}")
    exp = exp or ExperimentConfig()
    backend = backend or LPBackend()

    if spec.engine == "standard":
        engine = StandardBenders(problem, eps=spec.eps, iter_limit=exp.iter_limit, backend=backend,
                                 threads=exp.threads, audit_samples=exp.audit_samples)
        result = engine.run()
    else:
        cfg = EngineConfig(
            eps=spec.eps,
            stabilisation=stabilisation_for(spec, exp),
            iter_limit=exp.iter_limit,
            full_inner_loop=spec.engine == "adaptive-select",
            threads=exp.threads,
            audit_samples=exp.audit_samples,
            audit_seed=exp.seed,
        )
        engine = AdaptiveBenders(problem, cfg, backend, store=_load_store(exp.checkpoint, problem))
        result = engine.run()
        if save_store and exp.checkpoint is not None and engine.store is not None:
            save_checkpoint(engine.store, exp.checkpoint)

    result.settings.update({"label": spec.label, "gamma": spec.gamma, "dynamic": spec.dynamic,
                            "lp_solves": backend.stats["lp_solves"], "qp_solves": backend.stats["qp_solves"]})
    return result


def _run_one(spec: RunSpec, problem: StructuredProblem, exp: ExperimentConfig) -> RunOutcome:
    run_dir = exp.output_dir / spec.label
    try:
        result = run_engine(spec, problem, exp)
    except EngineError as e:
        logger.error(f"运行 {spec.label} 失败: {e}")
        return RunOutcome(spec=spec, error=str(e))
    write_run(result, run_dir, instance=problem.name, no_timing=exp.no_timing)
    return RunOutcome(spec=spec, result=result, run_dir=run_dir)


def run_experiment(problem: StructuredProblem, exp: ExperimentConfig) -> ExperimentReport:
    """
    按实验配置运行全部组合并写出对比表

    Args:
        problem: 结构化问题
        exp: 实验配置

    Returns:
        ExperimentReport
    """
    specs = exp.run_specs()
    logger.info(f"开始实验: 实例 {problem.name}, 共 {len(specs)} 次运行, 并发 {exp.parallel_runs}")
    start = time.perf_counter()

    outcomes: Dict[RunSpec, RunOutcome] = {}
    with tqdm(total=len(specs), desc="运行", unit="run") as progress:
        if exp.parallel_runs > 1:
            with ThreadPoolExecutor(max_workers=exp.parallel_runs) as pool:
                for outcome in pool.map(lambda s: _run_one(s, problem, exp), specs):
                    outcomes[outcome.spec] = outcome
                    progress.update(1)
        else:
            for spec in specs:
                outcomes[spec] = _run_one(spec, problem, exp)
                progress.update(1)

    report = ExperimentReport(outcomes=[outcomes[s] for s in specs])
    report.comparison_path = write_comparison(report.outcomes, exp.output_dir, problem.name, exp.no_timing)
    if any(s.engine == "stabilised" for s in specs):
        report.gamma_summary_path = write_gamma_summary(report.comparison_path, exp.output_dir)
    logger.info(f"实验完成: 耗时 {time.perf_counter() - start:.2f}s, 失败/未收敛 {len(report.failed)} 次")
    return report
