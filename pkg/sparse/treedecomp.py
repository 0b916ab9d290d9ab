"""
Древесные декомпозиции: эвристика min-fill и проверка определения.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Tuple

import networkx as nx
from networkx.algorithms.approximation import treewidth_min_fill_in

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class TreeDecomposition:
    bags: List[FrozenSet[int]]
    tree: nx.Graph

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def adhesions(self) -> List[FrozenSet[int]]:
        """Пересечения мешков вдоль рёбер дерева."""
        return [self.bags[a] & self.bags[b] for a, b in sorted(self.tree.edges())]

    def to_dict(self) -> Dict:
        return {
            "width": self.width,
            "bags": [sorted(b) for b in self.bags],
            "tree_edges": [list(e) for e in sorted(self.tree.edges())],
        }


@dataclass(eq=False)
class TreeValidation:
    ok: bool
    violations: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {"ok": self.ok, "violations": self.violations}


def tree_decompose_heuristic(g: nx.Graph) -> TreeDecomposition:
    """
    Декомпозиция по порядку исключения min-fill (без гарантии оптимальности).
    Пустой граф даёт пустую декомпозицию ширины -1.
    """
    if g.number_of_nodes() == 0:
        return TreeDecomposition(bags=[], tree=nx.Graph())
    width, decomposition = treewidth_min_fill_in(g)
    nodes = sorted(decomposition.nodes(), key=lambda b: (sorted(b), len(b)))
    index = {bag: i for i, bag in enumerate(nodes)}
    tree = nx.Graph()
    tree.add_nodes_from(range(len(nodes)))
    tree.add_edges_from((index[a], index[b]) for a, b in decomposition.edges())
    td = TreeDecomposition(bags=[frozenset(int(v) for v in b) for b in nodes], tree=tree)
    logger.debug(f"Min-fill tree decomposition: {len(nodes)} bags, width {td.width}")
    return td


def validate_tree_decomposition(g: nx.Graph, td: TreeDecomposition) -> TreeValidation:
    """
    Проверяет три свойства определения и то, что носитель - дерево.

    Returns:
        TreeValidation: ok и список нарушений с контрпримерами
    """
    violations: List[str] = []
    if td.bags and not nx.is_tree(td.tree):
        violations.append("tree: bag graph is not a tree")
    if td.tree.number_of_nodes() != len(td.bags):
        violations.append(f"tree: {td.tree.number_of_nodes()} tree nodes for {len(td.bags)} bags")

    covered = set().union(*td.bags) if td.bags else set()
    for v in sorted(g.nodes()):
        if v not in covered:
            violations.append(f"coverage: vertex {v} is in no bag")

    for u, v in sorted(tuple(sorted(e)) for e in g.edges()):
        if not any(u in bag and v in bag for bag in td.bags):
            violations.append(f"edge: ({u}, {v}) is in no bag")

    for v in sorted(covered):
        holders = [i for i, bag in enumerate(td.bags) if v in bag]
        if holders and not nx.is_connected(td.tree.subgraph(holders)):
            violations.append(f"running intersection: bags holding vertex {v} are disconnected")

    return TreeValidation(ok=not violations, violations=violations)


def restrict_bags(td: TreeDecomposition, vertices) -> List[Tuple[FrozenSet[int], str]]:
    """Мешки и смежности, пересечённые с множеством вершин (непустые, без повторов)."""
    keep = frozenset(vertices)
    seen: Dict[FrozenSet[int], str] = {}
    for bag in td.bags:
        part = bag & keep
        if part:
            seen.setdefault(part, "bag")
    for adhesion in td.adhesions():
        part = adhesion & keep
        if part:
            seen.setdefault(part, "adhesion")
    return list(seen.items())
