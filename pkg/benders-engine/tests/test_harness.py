"""
基准工具与运行产物测试
"""
import importlib.util
import json
import math
from pathlib import Path

import pandas as pd
import pytest
from click.testing import CliRunner
from pydantic import ValidationError

from core.logging import setup_logging
from decomposition.results import TRACE_COLUMNS
from harness.artifacts import comparison_frame, gamma_summary_frame, read_summary, read_trace
from harness.experiment import ExperimentConfig, RunSpec
from harness.runner import RunOutcome, run_engine, stabilisation_for
from harness.verify import check_trace, verify_directory
from main import EXIT_NOT_CONVERGED, EXIT_OK, EXIT_PARSE_ERROR, EXIT_VALIDATION_ERROR, EXIT_VERIFY_FAILED, cli


@pytest.fixture(autouse=True)
def restore_logging():
    yield
    # CliRunner 结束后会关闭它替换的 stderr
    setup_logging("WARNING")


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tiny_instance(runner, tmp_path):
    result = runner.invoke(cli, ["generate", "case_b", "--out", str(tmp_path / "instances"),
                                 "--name", "tiny", "--periods", "4"])
    assert result.exit_code == 0, result.output
    path = tmp_path / "instances" / "tiny.json"
    assert path.exists()
    assert (tmp_path / "instances" / "tiny_profiles.csv").exists()
    return path


def solve_args(instance, out, *extra):
    return ["--log-level", "WARNING", "solve", str(instance), "--out", str(out), *extra]


def test_run_specs_order():
    exp = ExperimentConfig(engines=["standard", "stabilised"], eps=[1.0, 0.1], gammas=[0.3, 0.7],
                           dynamic=True, gamma0_list=[0.5])
    labels = [spec.label for spec in exp.run_specs()]
    assert labels == [
        "standard_eps1", "stabilised_eps1_g0.3", "stabilised_eps1_g0.7", "stabilised_eps1_dyn0.5",
        "standard_eps0.1", "stabilised_eps0.1_g0.3", "stabilised_eps0.1_g0.7", "stabilised_eps0.1_dyn0.5",
    ]


@pytest.mark.parametrize("kwargs", [
    {"eps": [0.0]},
    {"gammas": [1.5]},
    {"p_low": 0.8, "p_high": 0.2},
    {"engines": ["simplex"]},
])
def test_experiment_config_rejects(kwargs):
    with pytest.raises(ValidationError):
        ExperimentConfig(**kwargs)


def test_zero_gamma_opens_clamp():
    stab = stabilisation_for(RunSpec("stabilised", 1.0, 0.0), ExperimentConfig())
    assert stab.gamma0 == 0.0
    assert stab.gamma_min == 0.0
    assert stabilisation_for(RunSpec("standard", 1.0), ExperimentConfig()) is None


def test_run_engine_records_label(two_node_problem):
    result = run_engine(RunSpec("stabilised", 0.01, 0.5), two_node_problem)
    assert result.converged
    assert result.settings["label"] == "stabilised_eps0.01_g0.5"
    assert result.settings["lp_solves"] > 0


def test_generate_synthetic_tree_reports_nodes(runner, tmp_path):
    result = runner.invoke(cli, ["generate", "synthetic_tree", "--out", str(tmp_path), "--periods", "4",
                                 "--stages", "3", "--branch", "3", "--uncertainties", "1"])
    assert result.exit_code == 0, result.output
    assert "13 个节点" in result.output


def test_solve_writes_artifacts(runner, tiny_instance, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(cli, solve_args(tiny_instance, out, "--algorithm", "standard", "--eps", "0.1"))
    assert result.exit_code == EXIT_OK, result.output

    run_dir = out / "standard_eps0.1"
    trace = read_trace(run_dir / "trace.csv")
    summary = read_summary(run_dir / "summary.json")
    assert list(trace.columns) == TRACE_COLUMNS
    assert summary["status"] == "Converged"
    assert summary["final_L"] == pytest.approx(trace["L_star"].iloc[-1])
    assert summary["gap"] <= 0.1 / 100


def test_solve_iteration_limit_exit_code(runner, tiny_instance, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(cli, solve_args(tiny_instance, out, "--algorithm", "standard", "--eps", "0.0001",
                                           "--iter-limit", "1"))
    assert result.exit_code == EXIT_NOT_CONVERGED
    summary = read_summary(out / "standard_eps0.0001" / "summary.json")
    assert summary["status"] == "IterationLimit"


def test_invalid_json_exits_without_output(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"regions": [', encoding="utf-8")
    out = tmp_path / "out"
    result = runner.invoke(cli, solve_args(bad, out))
    assert result.exit_code == EXIT_PARSE_ERROR
    assert not out.exists()


def test_no_timing_is_byte_reproducible(runner, tiny_instance, tmp_path):
    traces = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        result = runner.invoke(cli, solve_args(tiny_instance, out, "--algorithm", "stabilised", "--eps", "0.1",
                                               "--gamma", "0.5", "--no-timing"))
        assert result.exit_code == EXIT_OK, result.output
        traces.append((out / "stabilised_eps0.1_g0.5" / "trace.csv").read_bytes())
        summary = read_summary(out / "stabilised_eps0.1_g0.5" / "summary.json")
        assert summary["wall_time_s"] == 0.0
    assert traces[0] == traces[1]


def test_checkpoint_is_written_and_reused(runner, tiny_instance, tmp_path):
    checkpoint = tmp_path / "points.json"
    args = ["--algorithm", "adaptive", "--eps", "0.1", "--checkpoint", str(checkpoint)]
    first = runner.invoke(cli, solve_args(tiny_instance, tmp_path / "a", *args))
    assert first.exit_code == EXIT_OK, first.output
    assert checkpoint.exists()

    second = runner.invoke(cli, solve_args(tiny_instance, tmp_path / "b", *args))
    assert second.exit_code == EXIT_OK, second.output
    a = read_summary(tmp_path / "a" / "adaptive_eps0.1" / "summary.json")
    b = read_summary(tmp_path / "b" / "adaptive_eps0.1" / "summary.json")
    assert b["final_U"] == pytest.approx(a["final_U"], rel=1e-3)


def test_compare_writes_tables(runner, tiny_instance, tmp_path):
    out = tmp_path / "cmp"
    result = runner.invoke(cli, ["--log-level", "WARNING", "compare", str(tiny_instance), "--out", str(out),
                                 "--algorithm", "standard", "--algorithm", "stabilised",
                                 "--eps", "0.1", "--gamma", "0.3", "--gamma", "0.7"])
    assert result.exit_code == EXIT_OK, result.output

    comparison = pd.read_csv(out / "comparison.csv")
    assert len(comparison) == 3
    standard = comparison[comparison["engine"] == "standard"].iloc[0]
    assert standard["speed_up"] == pytest.approx(1.0)
    assert (comparison["status"] == "Converged").all()

    gamma_summary = pd.read_csv(out / "gamma_summary.csv")
    assert sorted(gamma_summary["gamma"]) == [0.3, 0.7]
    assert (gamma_summary["runs"] == 1).all()

    verified = runner.invoke(cli, ["verify", str(out)])
    assert verified.exit_code == EXIT_OK, verified.output


@pytest.mark.parametrize("engines", [["stabilised"], ["adaptive", "adaptive"]])
def test_compare_needs_two_engines(runner, tiny_instance, tmp_path, engines):
    args = ["--log-level", "WARNING", "compare", str(tiny_instance), "--out", str(tmp_path / "cmp"), "--eps", "0.1"]
    for engine in engines:
        args += ["--algorithm", engine]
    result = runner.invoke(cli, args)
    assert result.exit_code == EXIT_VALIDATION_ERROR
    assert not (tmp_path / "cmp" / "comparison.csv").exists()


def test_verify_detects_tampered_summary(runner, tiny_instance, tmp_path):
    out = tmp_path / "out"
    runner.invoke(cli, solve_args(tiny_instance, out, "--algorithm", "standard", "--eps", "0.1"))
    assert runner.invoke(cli, ["verify", str(out)]).exit_code == EXIT_OK

    path = out / "standard_eps0.1" / "summary.json"
    summary = json.loads(path.read_text(encoding="utf-8"))
    summary["gap"] = summary["gap"] + 0.25
    path.write_text(json.dumps(summary), encoding="utf-8")
    result = runner.invoke(cli, ["verify", str(out)])
    assert result.exit_code == EXIT_VERIFY_FAILED
    assert "间隙" in result.output


def test_verify_empty_directory_fails(runner, tmp_path):
    assert runner.invoke(cli, ["verify", str(tmp_path)]).exit_code == EXIT_VERIFY_FAILED


def test_check_trace_flags_bound_violations():
    rows = [
        {"iter": 1, "L_star": 5.0, "U_star": 9.0, "target": math.nan, "level_value": math.nan},
        {"iter": 2, "L_star": 4.0, "U_star": 9.5, "target": 6.0, "level_value": 6.5},
    ]
    issues = check_trace(pd.DataFrame(rows), "run")
    assert len(issues) == 3


def test_comparison_without_standard_has_nan_speed_up(two_node_problem):
    spec = RunSpec("adaptive", 0.01)
    outcome = RunOutcome(spec=spec, result=run_engine(spec, two_node_problem))
    df = comparison_frame([outcome, RunOutcome(spec=RunSpec("stabilised", 0.01, 0.5), error="boom")])
    assert math.isnan(df["speed_up"].iloc[0])
    assert df["status"].iloc[1] == "Error"
    assert gamma_summary_frame(df).empty


def test_service_metadata():
    path = Path(__file__).resolve().parents[1] / "__init__.py"
    spec = importlib.util.spec_from_file_location("benders_engine_meta", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    assert module.__version__ == "1.0.0"
    assert not hasattr(module, "__author__")
