# features.py — Taint flows → suspect list and category-pair feature vector
#
# Method-pair features are too sparse to learn from, so each flow is reduced
# to its (source category, sink category) pair: one bit per cell of the
# 17 × 19 taxonomy grid. A repeated sink row of the taxonomy shares the
# column of its first occurrence.
#
# Public API:
#   build_flow_features(flows, catalog, app_name)  — FlowFeatureVector
#   extract_suspects(flows, system_processes)      — SuspectList
#   features_to_dataset(vectors)                   — FlowFeatureVectors Dataset

from dataclasses import dataclass

import numpy as np

from arff_io import Attribute, Dataset
from catalog import SINK_CATEGORIES, SOURCE_CATEGORIES, SourceSinkCatalog, sink_index, source_index
from taint import involved_classes


class FeatureError(Exception):
    """Base class for feature-extraction failures."""


class UnclassifiedEndpoint(FeatureError):
    def __init__(self, signature: str, role: str):
        self.signature = signature
        self.role = role
        super().__init__(f"{signature} has no {role} category in the catalog")


@dataclass(frozen=True)
class FlowFeatureVector:
    app_name: str
    bits: np.ndarray    # uint8, shape (len(SOURCE_CATEGORIES), len(SINK_CATEGORIES))

    def pairs(self) -> list:
        """Set cells as (source category, sink category), row-major."""
        return [(SOURCE_CATEGORIES[i], SINK_CATEGORIES[j]) for i, j in zip(*np.nonzero(self.bits))]

    def count(self) -> int:
        return int(self.bits.sum())

    def to_dict(self) -> dict:
        return {
            "app":     self.app_name,
            "sources": list(SOURCE_CATEGORIES),
            "sinks":   list(SINK_CATEGORIES),
            "bits":    self.bits.astype(int).tolist(),
            "pairs":   [list(p) for p in self.pairs()],
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, FlowFeatureVector):
            return NotImplemented
        return self.app_name == other.app_name and np.array_equal(self.bits, other.bits)


@dataclass(frozen=True)
class SuspectList:
    names: tuple

    def __iter__(self):
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name) -> bool:
        return name in self.names


def build_flow_features(flows: list, catalog: SourceSinkCatalog, app_name: str = "") -> FlowFeatureVector:
    bits = np.zeros((len(SOURCE_CATEGORIES), len(SINK_CATEGORIES)), dtype=np.uint8)
    for flow in flows:
        source = catalog.classify(flow.source_method).source
        if source is None:
            raise UnclassifiedEndpoint(flow.source_method, "source")
        sink = catalog.classify(flow.sink_method).sink
        if sink is None:
            raise UnclassifiedEndpoint(flow.sink_method, "sink")
        bits[source_index(source), sink_index(sink)] = 1
    return FlowFeatureVector(app_name, bits)


def extract_suspects(flows: list, system_processes=()) -> SuspectList:
    """Classes on any flow path plus the always-monitored system processes, sorted."""
    return SuspectList(tuple(sorted(set(involved_classes(flows)) | set(system_processes))))


def _column_names() -> list:
    """Attribute name per grid cell; repeated sink names get a '#<column>' suffix."""
    seen  = set()
    sinks = []
    for j, name in enumerate(SINK_CATEGORIES):
        sinks.append(name if name not in seen else f"{name}#{j}")
        seen.add(name)
    return [f"{src}->{snk}" for src in SOURCE_CATEGORIES for snk in sinks]


def features_to_dataset(vectors: list, relation: str = "FlowFeatureVectors") -> Dataset:
    """One row per app: its name, then one 0/1 attribute per category pair."""
    names = [v.app_name for v in vectors]
    attributes = [Attribute("App", tuple(dict.fromkeys(names)))]
    attributes += [Attribute(col, ("0", "1")) for col in _column_names()]
    rows = [(v.app_name, *(str(int(b)) for b in v.bits.ravel())) for v in vectors]
    return Dataset(relation, attributes, rows)
