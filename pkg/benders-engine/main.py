"""
分解引擎命令行入口

子命令:
- solve: 单引擎求解，写出 trace.csv / summary.json
- compare: 多引擎、多 eps、γ 网格对比，写出 comparison.csv / gamma_summary.csv
- vss: 计算随机解价值
- generate: 生成示例或合成实例
- verify: 核查输出目录中的运行产物
"""
import os
import sys
from functools import wraps
from pathlib import Path

import click
from loguru import logger
from pydantic import ValidationError

current_dir = os.path.dirname(os.path.abspath(__file__))
if current_dir not in sys.path:
    sys.path.insert(0, current_dir)

from config import config
from core.exceptions import (
    DimensionError,
    EngineError,
    InstanceParseError,
    InstanceValidationError,
)
from core.logging import setup_logging
from decomposition.results import RunStatus
from harness.artifacts import write_json, write_run
from harness.experiment import ENGINE_NAMES, ExperimentConfig, RunSpec
from harness.runner import run_engine, run_experiment
from harness.verify import verify_directory
from power_system.instance import PowerSystemModel, build_model, load_instance, save_instance
from power_system.toy_cases import ToyCaseParams, instance_document, toy_case_model
from power_system.vss import compute_vss, monolithic_solver

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_PARSE_ERROR = 3
EXIT_VALIDATION_ERROR = 4
EXIT_SOLVER_FAILURE = 5
EXIT_VERIFY_FAILED = 6

TOY_CASES = ("case_a", "case_b", "case_c", "synthetic_tree")


def exit_code_for(error: Exception) -> int:
    """异常类别 → 退出码"""
    if isinstance(error, InstanceParseError):
        return EXIT_PARSE_ERROR
    if isinstance(error, (InstanceValidationError, ValidationError, DimensionError)):
        return EXIT_VALIDATION_ERROR
    return EXIT_SOLVER_FAILURE


def handle_errors(func):
    """将引擎异常转换为退出码"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (EngineError, ValidationError) as e:
            logger.error(f"{type(e).__name__}: {e}")
            sys.exit(exit_code_for(e))
    return wrapper


def load_model(instance: str, seed: int = 0) -> PowerSystemModel:
    """实例路径或内置示例名 → 模型"""
    path = Path(instance)
    if path.exists():
        doc, profile = load_instance(path)
        return build_model(doc, profile)
    if instance in TOY_CASES:
        return toy_case_model(instance, ToyCaseParams(seed=seed))
    raise InstanceParseError(f"实例文件不存在: {instance}")


def experiment_config(**kwargs) -> ExperimentConfig:
    return ExperimentConfig(**{k: v for k, v in kwargs.items() if v is not None})


def stabilisation_options(func):
    for option in reversed([
        click.option("--omega", type=float, default=None, help="动态 γ 收缩系数 ω"),
        click.option("--p-low", type=float, default=None, help="改进比下阈值"),
        click.option("--p-high", type=float, default=None, help="改进比上阈值"),
        click.option("--seed", type=int, default=0, show_default=True, help="合成实例随机种子"),
        click.option("--threads", type=int, default=None, help="子问题并发线程数"),
        click.option("--out", type=click.Path(path_type=Path), default=None, help="输出目录"),
        click.option("--no-timing", is_flag=True, help="计时列写 0，保证产物逐字节可复现"),
        click.option("--iter-limit", type=int, default=None, help="外迭代上限"),
        click.option("--checkpoint", type=click.Path(path_type=Path), default=None, help="点集检查点JSON"),
    ]):
        func = option(func)
    return func


@click.group()
@click.option("--log-level", default=None, help="日志级别")
@click.option("--log-file", default=None, help="日志文件")
def cli(log_level, log_file):
    """稳定化自适应Benders分解基准工具"""
    setup_logging(log_level, log_file)


@cli.command()
@click.argument("instance")
@click.option("--algorithm", type=click.Choice(ENGINE_NAMES), default="stabilised", show_default=True)
@click.option("--eps", type=float, default=None, help="收敛容差（百分比）")
@click.option("--gamma", type=float, default=None, help="水平参数 γ（动态时为初始值）")
@click.option("--dynamic-gamma", is_flag=True, help="启用动态 γ")
@click.option("--audit-samples", type=int, default=0, show_default=True, help="结束后抽检割的样本数")
@stabilisation_options
@handle_errors
def solve(instance, algorithm, eps, gamma, dynamic_gamma, audit_samples, omega, p_low, p_high,
          seed, threads, out, no_timing, iter_limit, checkpoint):
    """求解单个实例"""
    model = load_model(instance, seed)
    exp = experiment_config(
        engines=[algorithm], omega=omega, p_low=p_low, p_high=p_high, seed=seed, threads=threads,
        output_dir=out, no_timing=no_timing, iter_limit=iter_limit, checkpoint=checkpoint,
        audit_samples=audit_samples,
    )
    eps = config.default_eps if eps is None else eps
    if algorithm == "stabilised":
        spec = RunSpec(algorithm, eps, config.gamma if gamma is None else gamma, dynamic=dynamic_gamma)
    else:
        spec = RunSpec(algorithm, eps)

    result = run_engine(spec, model.problem, exp, save_store=checkpoint is not None)
    run_dir = write_run(result, exp.output_dir / spec.label, instance=model.problem.name, no_timing=no_timing)

    click.echo(f"{spec.label}: {result.status.value}, L*={result.lower_bound:.6f}, U*={result.upper_bound:.6f}, "
               f"迭代 {result.iterations}, 精确求解 {result.exact_evaluations}")
    click.echo(f"产物目录: {run_dir}")
    if result.status is RunStatus.SOLVER_FAILURE:
        sys.exit(EXIT_SOLVER_FAILURE)
    sys.exit(EXIT_OK if result.converged else EXIT_NOT_CONVERGED)


@cli.command()
@click.argument("instance")
@click.option("--algorithm", "engines", type=click.Choice(ENGINE_NAMES), multiple=True,
              help="参与对比的引擎，可重复，至少两个")
@click.option("--eps", "eps_list", type=float, multiple=True, help="收敛容差（百分比），可重复")
@click.option("--gamma", "gammas", type=float, multiple=True, help="固定 γ 网格，可重复")
@click.option("--dynamic-gamma", is_flag=True, help="同时运行动态 γ")
@click.option("--gamma0", "gamma0_list", type=float, multiple=True, help="动态 γ 初始值，可重复")
@click.option("--parallel-runs", type=int, default=1, show_default=True, help="并发运行数")
@stabilisation_options
@handle_errors
def compare(instance, engines, eps_list, gammas, dynamic_gamma, gamma0_list, parallel_runs, omega, p_low,
            p_high, seed, threads, out, no_timing, iter_limit, checkpoint):
    """多引擎对比"""
    model = load_model(instance, seed)
    exp = experiment_config(
        instance=Path(instance) if Path(instance).exists() else None,
        engines=list(engines) or None, eps=list(eps_list) or None, gammas=list(gammas) or None,
        dynamic=dynamic_gamma, gamma0_list=list(gamma0_list), omega=omega, p_low=p_low, p_high=p_high,
        seed=seed, threads=threads, parallel_runs=parallel_runs, output_dir=out, no_timing=no_timing,
        iter_limit=iter_limit, checkpoint=checkpoint,
    )
    if len(set(exp.engines)) < 2:
        raise InstanceValidationError(f"对比至少需要两个不同引擎，当前: {list(exp.engines)}")
    report = run_experiment(model.problem, exp)
    click.echo(f"对比表: {report.comparison_path}")
    if report.gamma_summary_path:
        click.echo(f"γ 统计: {report.gamma_summary_path}")
    sys.exit(EXIT_NOT_CONVERGED if report.failed else EXIT_OK)


@cli.command()
@click.argument("instance")
@click.option("--solver", type=click.Choice(("monolithic",) + ENGINE_NAMES), default="monolithic",
              show_default=True, help="求解随机问题与期望值问题所用方法")
@click.option("--eps", type=float, default=0.01, show_default=True, help="引擎求解时的收敛容差（百分比）")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="输出目录")
@handle_errors
def vss(instance, solver, eps, seed, out):
    """计算随机解价值 (VSS)"""
    model = load_model(instance, seed)
    if solver == "monolithic":
        solve_fn = monolithic_solver()
    else:
        spec = RunSpec(solver, eps, config.gamma if solver == "stabilised" else None)

        def solve_fn(problem):
            result = run_engine(spec, problem)
            if not result.converged:
                raise EngineError(f"{spec.label} 未收敛: {result.status.value}")
            return result.upper_bound, result.incumbent

    report = compute_vss(model, solver=solve_fn)
    out = out or Path(config.output_dir)
    path = write_json({"instance": model.problem.name, "solver": solver, **report.to_dict()}, out / "vss.json")
    click.echo(f"随机问题最优值: {report.stochastic_optimum:.6f}")
    click.echo(f"期望值策略成本: {report.ev_policy_cost:.6f}")
    click.echo(f"VSS: {report.vss:.6f} ({report.percent:.3f}%)")
    click.echo(f"报告: {path}")


@cli.command()
@click.argument("which", type=click.Choice(TOY_CASES))
@click.option("--out", type=click.Path(path_type=Path), default=Path("instances"), show_default=True)
@click.option("--name", default=None, help="实例文件名（不含扩展名）")
@click.option("--periods", type=int, default=24, show_default=True)
@click.option("--slices", type=int, default=1, show_default=True)
@click.option("--peak-demand", type=float, default=100.0, show_default=True)
@click.option("--stages", type=int, default=3, show_default=True)
@click.option("--branch", type=int, default=3, show_default=True)
@click.option("--uncertainties", type=int, default=1, show_default=True)
@click.option("--regions", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@handle_errors
def generate(which, out, name, periods, slices, peak_demand, stages, branch, uncertainties, regions, seed):
    """生成示例实例"""
    params = ToyCaseParams(periods=periods, slices=slices, peak_demand=peak_demand, stages=stages,
                           branch=branch, uncertainties=uncertainties, regions=regions, seed=seed)
    doc, profile = instance_document(which, params)
    model = build_model(doc, profile)
    path = save_instance(doc, profile, out, name)
    click.echo(f"{path}: {model.problem.node_count} 个节点, 主变量 {model.problem.master.x_dim}")


@cli.command()
@click.argument("out_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
def verify(out_dir):
    """核查运行产物"""
    report = verify_directory(out_dir)
    click.echo(f"已核查 {len(report.checked)} 个运行, 发现 {len(report.issues)} 个问题")
    for issue in report.issues:
        click.echo(f"  - {issue}")
    sys.exit(EXIT_OK if report.ok else EXIT_VERIFY_FAILED)


if __name__ == "__main__":
    cli()
