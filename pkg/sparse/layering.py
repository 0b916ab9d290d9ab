"""
Слоение Бейкера: BFS-слои и удаление рёбер между слоями одного класса.

Ребро между слоями j и j+1 относится к классу j mod (kparam+1); удаляется
класс с минимальным весом. Классы разбивают межслойные рёбра, поэтому
удалённый вес не превосходит (общий вес)/(kparam+1).
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import networkx as nx

from utils.errors import InvariantViolation, ParameterError
from utils.seeding import make_rng

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12

Edge = Tuple[int, int]


@dataclass(eq=False)
class Layering:
    kparam: int
    layers: Dict[int, int]
    roots: List[int]
    offsets: List[int]
    removed_edges: List[Edge]
    removed_weight: float
    total_weight: float
    components: List[List[int]] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "kparam": self.kparam,
            "roots": self.roots,
            "offsets": self.offsets,
            "removed_edges": [list(e) for e in self.removed_edges],
            "removed_weight": self.removed_weight,
            "total_weight": self.total_weight,
            "components": self.components,
        }


def _weight(g: nx.Graph, u: int, v: int) -> float:
    return float(g[u][v].get("weight", 1.0))


def prune_edges(g: nx.Graph, removed: List[Edge]) -> nx.Graph:
    pruned = g.copy()
    pruned.remove_edges_from(removed)
    return pruned


def baker_layering(g: nx.Graph, kparam: int, seed: int = 0) -> Layering:
    """
    Args:
        g: Граф взаимодействий (атрибут weight, по умолчанию 1)
        kparam: Число классов минус один
        seed: Seed выбора корня BFS в каждой компоненте

    Returns:
        Layering: удалённые рёбра и компоненты оставшегося графа

    Raises:
        ParameterError: kparam < 1
    """
    if kparam < 1:
        raise ParameterError(f"kparam must be at least 1, got {kparam}")
    classes = kparam + 1
    layers: Dict[int, int] = {}
    roots: List[int] = []
    offsets: List[int] = []
    removed: List[Edge] = []
    removed_weight = 0.0
    total_weight = float(sum(_weight(g, u, v) for u, v in g.edges()))

    for index, component in enumerate(sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: c[0])):
        rng = make_rng(seed, "baker-root", index)
        root = int(component[int(rng.integers(len(component)))])
        roots.append(root)
        depth = nx.single_source_shortest_path_length(g, root)
        layers.update(depth)

        buckets: List[List[Edge]] = [[] for _ in range(classes)]
        weights = [0.0] * classes
        for u, v in g.subgraph(component).edges():
            if depth[u] == depth[v]:
                continue
            low = min(depth[u], depth[v])
            buckets[low % classes].append((min(u, v), max(u, v)))
            weights[low % classes] += _weight(g, u, v)
        offset = min(range(classes), key=lambda i: (weights[i], i))
        offsets.append(offset)
        removed.extend(sorted(buckets[offset]))
        removed_weight += weights[offset]

    if removed_weight > total_weight / classes + WEIGHT_TOL:
        raise InvariantViolation(
            f"Removed weight {removed_weight} exceeds total/(k+1) = {total_weight / classes}"
        )
    pruned = prune_edges(g, removed)
    components = sorted((sorted(int(v) for v in c) for c in nx.connected_components(pruned)), key=lambda c: c[0])
    logger.info(
        f"Baker layering k={kparam}: removed {len(removed)} edges, weight {removed_weight:.4g} of {total_weight:.4g}"
    )
    return Layering(
        kparam=kparam,
        layers={int(v): int(l) for v, l in layers.items()},
        roots=roots,
        offsets=offsets,
        removed_edges=removed,
        removed_weight=removed_weight,
        total_weight=total_weight,
        components=components,
    )
