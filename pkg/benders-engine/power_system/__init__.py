"""
多时间尺度随机电力系统规划模型
"""
from .instance import PowerSystemModel, build_model, load_instance, parse_document, save_instance
from .profiles import OperationalProfile, load_profile_csv, save_profile_csv
from .schema import InstanceDocument, TechnologyData, TreeSpec, UncertainParameter
from .toy_cases import ToyCaseParams, generate_toy_case, instance_document, toy_case_model
from .tree import MultiHorizonTree, build_tree
from .vss import VssReport, compute_vss

__all__ = [
    "PowerSystemModel",
    "build_model",
    "load_instance",
    "parse_document",
    "save_instance",
    "OperationalProfile",
    "load_profile_csv",
    "save_profile_csv",
    "InstanceDocument",
    "TechnologyData",
    "TreeSpec",
    "UncertainParameter",
    "ToyCaseParams",
    "generate_toy_case",
    "instance_document",
    "toy_case_model",
    "MultiHorizonTree",
    "build_tree",
    "VssReport",
    "compute_vss",
]
