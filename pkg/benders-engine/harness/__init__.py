"""
实验运行与产物核查
"""

from .experiment import ENGINE_NAMES, ExperimentConfig, RunSpec
from .artifacts import read_summary, read_trace, write_run
from .runner import ExperimentReport, RunOutcome, run_engine, run_experiment
from .verify import VerifyReport, verify_directory

__all__ = [
    "ENGINE_NAMES",
    "ExperimentConfig",
    "RunSpec",
    "read_summary",
    "read_trace",
    "write_run",
    "ExperimentReport",
    "RunOutcome",
    "run_engine",
    "run_experiment",
    "VerifyReport",
    "verify_directory",
]
