"""
Рекурсивные вершинные сепараторы по древесной декомпозиции.

Кандидаты в сепараторы - мешки и смежности, пересечённые с компонентой.
Выбирается кандидат с наименьшей крупнейшей оставшейся компонентой, при
равенстве - меньший по размеру.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

import config
from hamiltonian.model import LocalHamiltonian, LocalTerm
from sparse.treedecomp import TreeDecomposition, restrict_bags
from utils.errors import InvariantViolation, ParameterError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


@dataclass(eq=False)
class ClusterPartition:
    """
    Удалённые рёбра RE, удалённые вершины RV (свободные кудиты) и кластеры -
    компоненты оставшегося графа без удалённых вершин.
    """

    n: int
    clusters: List[List[int]]
    removed_vertices: List[int] = field(default_factory=list)
    removed_edges: List[Edge] = field(default_factory=list)
    r: Optional[int] = None
    separator_bound: Optional[float] = None

    def __post_init__(self):
        seen: Dict[int, int] = {}
        for index, cluster in enumerate(self.clusters):
            for v in cluster:
                if v in seen:
                    raise InvariantViolation(f"Vertex {v} lies in clusters {seen[v]} and {index}")
                seen[v] = index
        for v in self.removed_vertices:
            if v in seen:
                raise InvariantViolation(f"Removed vertex {v} also lies in cluster {seen[v]}")
        self._cluster_of = seen

    def cluster_of(self, v: int) -> Optional[int]:
        """Номер кластера вершины; None для удалённых и непокрытых."""
        return self._cluster_of.get(v)

    def units(self) -> List[List[int]]:
        """Кластеры и удалённые вершины как одиночные блоки."""
        return [list(c) for c in self.clusters] + [[v] for v in self.removed_vertices]

    def contains_term(self, term: LocalTerm) -> bool:
        """Носитель члена целиком внутри одного кластера."""
        owners = {self.cluster_of(u) for u in term.support}
        return len(owners) == 1 and None not in owners

    def split_terms(self, H: LocalHamiltonian) -> Tuple[List[int], List[int]]:
        """
        Returns:
            Tuple: (индексы членов внутри одного кластера, индексы выброшенных)
        """
        kept, dropped = [], []
        for idx, term in enumerate(H.terms):
            if self.contains_term(term):
                kept.append(idx)
            else:
                dropped.append(idx)
        return kept, dropped

    def pruned(self, H: LocalHamiltonian) -> Tuple[LocalHamiltonian, float]:
        """H′ из внутрикластерных членов и бюджет Вейля Σ ‖h_e‖ выброшенных."""
        _, dropped = self.split_terms(H)
        H_prime = H.filter_terms(self.contains_term)
        budget = float(np.sum(H.norms[dropped])) if dropped else 0.0
        return H_prime, budget

    def check_independent(self, H_prime: LocalHamiltonian) -> None:
        for term in H_prime.terms:
            if not self.contains_term(term):
                raise InvariantViolation(f"Term on {term.support} crosses clusters")

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "r": self.r,
            "clusters": self.clusters,
            "cluster_sizes": [len(c) for c in self.clusters],
            "removed_vertices": self.removed_vertices,
            "removed_edges": [list(e) for e in self.removed_edges],
            "separator_bound": self.separator_bound,
        }


def components_after(g: nx.Graph, removed_vertices: Iterable[int] = (), removed_edges: Iterable[Edge] = ()) -> List[List[int]]:
    pruned = g.copy()
    pruned.remove_edges_from(removed_edges)
    pruned.remove_nodes_from(removed_vertices)
    return sorted((sorted(int(v) for v in c) for c in nx.connected_components(pruned)), key=lambda c: c[0])


def partition_from_removals(
    g: nx.Graph,
    removed_vertices: Sequence[int] = (),
    removed_edges: Sequence[Edge] = (),
) -> ClusterPartition:
    """Разбиение по явно заданным удалённым вершинам и рёбрам."""
    return ClusterPartition(
        n=g.number_of_nodes(),
        clusters=components_after(g, removed_vertices, removed_edges),
        removed_vertices=sorted(int(v) for v in removed_vertices),
        removed_edges=[tuple(sorted(e)) for e in removed_edges],
    )


def _best_separator(g: nx.Graph, component: List[int], td: TreeDecomposition) -> List[int]:
    sub = g.subgraph(component)
    best = None
    for candidate, _ in restrict_bags(td, component):
        rest = sub.copy()
        rest.remove_nodes_from(candidate)
        largest = max((len(c) for c in nx.connected_components(rest)), default=0)
        key = (largest, len(candidate), sorted(candidate))
        if best is None or key < best[0]:
            best = (key, sorted(candidate))
    if best is None or best[0][0] >= len(component):
        raise InvariantViolation(f"No separator shrinks the component of size {len(component)}")
    return best[1]


def recursive_separators(g: nx.Graph, td: TreeDecomposition, r: int) -> ClusterPartition:
    """
    Удаляет сбалансированные сепараторы, пока все компоненты не станут ≤ r.

    Args:
        g: Граф (td - его древесная декомпозиция)
        td: Древесная декомпозиция
        r: Предельный размер кластера

    Returns:
        ClusterPartition: удалённые вершины и кластеры

    Raises:
        ParameterError: r < width + 1
    """
    if r < td.width + 1 or r < 1:
        raise ParameterError(f"Cluster size r={r} is below bag size {td.width + 1}")
    removed: List[int] = []
    pending = components_after(g)
    clusters: List[List[int]] = []
    while pending:
        component = pending.pop()
        if len(component) <= r:
            clusters.append(component)
            continue
        separator = _best_separator(g, component, td)
        removed.extend(separator)
        rest = g.subgraph(component).copy()
        rest.remove_nodes_from(separator)
        pending.extend(sorted(int(v) for v in c) for c in nx.connected_components(rest))

    n = g.number_of_nodes()
    bound = config.SEPARATOR_CONSTANT * (td.width + 1) * n / r
    if len(removed) > bound:
        logger.warning(f"Removed {len(removed)} vertices, above c_s*(w+1)*n/r = {bound:.4g}")
    logger.info(f"Separators: {len(removed)} vertices removed, {len(clusters)} clusters of size <= {r}")
    return ClusterPartition(
        n=n,
        clusters=sorted(clusters, key=lambda c: c[0]),
        removed_vertices=sorted(removed),
        r=r,
        separator_bound=bound,
    )
