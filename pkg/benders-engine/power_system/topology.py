"""
电网拓扑: 区域、线路关联关系、各区域可用技术
"""
from dataclasses import dataclass, field
from typing import Dict, List

from core.exceptions import InstanceValidationError
from .schema import THERMAL_KINDS, InstanceDocument


@dataclass
class GridTopology:
    regions: List[str]
    lines: List[str]
    line_in: Dict[str, List[str]] = field(default_factory=dict)
    line_out: Dict[str, List[str]] = field(default_factory=dict)
    thermal: Dict[str, List[str]] = field(default_factory=dict)
    storage: Dict[str, List[str]] = field(default_factory=dict)
    renewable: Dict[str, List[str]] = field(default_factory=dict)

    @classmethod
    def from_document(cls, doc: InstanceDocument) -> "GridTopology":
        regions = list(doc.regions)
        topo = cls(
            regions=regions,
            lines=[line.name for line in doc.lines],
            line_in={z: [] for z in regions},
            line_out={z: [] for z in regions},
            thermal={z: [] for z in regions},
            storage={z: [] for z in regions},
            renewable={z: [] for z in regions},
        )
        for line in doc.lines:
            if line.from_region not in topo.line_out or line.to_region not in topo.line_in:
                raise InstanceValidationError(f"线路 {line.name} 端点未声明", locations=[f"lines.{line.name}"])
            # 正向潮流: from 区域流出，to 区域流入
            topo.line_out[line.from_region].append(line.name)
            topo.line_in[line.to_region].append(line.name)
        for tech in doc.technologies:
            target = topo.thermal if tech.kind in THERMAL_KINDS else topo.renewable
            target[tech.region].append(tech.name)
        for tech in doc.storage:
            topo.storage[tech.region].append(tech.name)
        return topo

    def check(self) -> None:
        """每条线路恰好出现在一个流入集合与一个流出集合中"""
        for name in self.lines:
            n_in = sum(name in v for v in self.line_in.values())
            n_out = sum(name in v for v in self.line_out.values())
            if n_in != 1 or n_out != 1:
                raise InstanceValidationError(f"线路 {name} 关联关系不一致", locations=[f"lines.{name}"])
