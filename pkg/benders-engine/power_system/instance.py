"""
实例读写与模型构造
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from loguru import logger
from pydantic import ValidationError

from core.exceptions import InstanceParseError, InstanceValidationError
from problem.structured_problem import StructuredProblem, validate
from .master_builder import MasterLayout, build_master
from .operational_builder import OperationalLayout, build_subproblem_template
from .profiles import OperationalProfile, load_profile_csv, save_profile_csv
from .schema import InstanceDocument
from .topology import GridTopology
from .tree import MultiHorizonTree, build_tree


@dataclass
class PowerSystemModel:
    """实例构造产物"""
    document: InstanceDocument
    profile: OperationalProfile
    topology: GridTopology
    tree: MultiHorizonTree
    master_layout: MasterLayout
    operational_layout: OperationalLayout
    problem: StructuredProblem


def parse_document(text: str) -> InstanceDocument:
    """解析实例JSON文本"""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceParseError(f"实例JSON解析失败: {e.msg}", line=e.lineno, column=e.colno)
    try:
        return InstanceDocument.model_validate(raw)
    except ValidationError as e:
        locations = [".".join(str(p) for p in err["loc"]) for err in e.errors()]
        raise InstanceValidationError(f"实例校验失败: {e.error_count()} 处错误 ({', '.join(locations)})",
                                      locations=locations)


def load_instance(path) -> Tuple[InstanceDocument, OperationalProfile]:
    """
    读取实例文件及其运行曲线

    Args:
        path: 实例JSON路径

    Returns:
        (InstanceDocument, OperationalProfile)
    """
    path = Path(path)
    if not path.exists():
        raise InstanceParseError(f"实例文件不存在: {path}")
    doc = parse_document(path.read_text(encoding="utf-8"))
    profile_path = Path(doc.profiles.path)
    if not profile_path.is_absolute():
        profile_path = path.parent / profile_path
    profile = load_profile_csv(profile_path)
    logger.info(f"实例加载完成: {doc.name} ({len(doc.regions)} 个区域, {len(doc.all_technologies)} 项技术)")
    return doc, profile


def save_instance(doc: InstanceDocument, profile: OperationalProfile, out_dir, name: Optional[str] = None) -> Path:
    """
    写出实例JSON与运行曲线CSV（同目录）

    Returns:
        实例JSON路径
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = name or doc.name
    csv_name = f"{name}_profiles.csv"
    save_profile_csv(profile, out_dir / csv_name)
    doc = doc.model_copy(update={"profiles": doc.profiles.model_copy(update={"path": csv_name})})
    path = out_dir / f"{name}.json"
    path.write_text(doc.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"实例已写出: {path}")
    return path


def build_model(doc: InstanceDocument, profile: OperationalProfile,
                tree: Optional[MultiHorizonTree] = None) -> PowerSystemModel:
    """
    由实例文档构造结构化问题

    Args:
        doc: 实例文档
        profile: 运行曲线
        tree: 指定情景树（期望值问题使用），默认由文档构造

    Returns:
        PowerSystemModel
    """
    renewable_profiles = sorted({t.profile for t in doc.technologies if t.kind == "renewable"})
    profile.validate(doc.regions, renewable_profiles, doc.economics.hours_per_year)
    topology = GridTopology.from_document(doc)
    topology.check()
    tree = tree or build_tree(doc.tree, doc.economics.discount_rate)
    master_layout = build_master(doc, tree)
    template, op_layout = build_subproblem_template(doc, topology, profile, max_tax=tree.max_tax)
    problem = StructuredProblem(
        master=master_layout.master,
        template=template,
        nodes=master_layout.decision_nodes(),
        name=doc.name,
    )
    report = validate(problem)
    if not report.ok:
        raise InstanceValidationError(f"结构化问题校验失败:\n{report}", locations=report.codes())
    logger.info(
        f"模型构造完成: {doc.name}, 节点 {problem.node_count}, 主变量 {problem.master.x_dim}, "
        f"子问题 {template.y_dim} 变量 × {template.con_dim} 约束"
    )
    return PowerSystemModel(doc, profile, topology, tree, master_layout, op_layout, problem)
