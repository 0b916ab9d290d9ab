"""
Генераторы экземпляров гамильтонианов и графов.

Все генераторы детерминированы при заданном seed и нормируют члены так,
что ‖h_e‖ ≤ 1.
"""
import itertools
import logging
from typing import Dict, Iterable, List, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy.spatial import Delaunay

from hamiltonian.basis import pauli_string
from hamiltonian.model import LocalHamiltonian
from threshold.graph import WeightedGraph
from utils.errors import ParameterError
from utils.seeding import make_rng

logger = logging.getLogger(__name__)

HAMILTONIAN_FAMILIES = ("complete", "uniform-complete", "grid-heisenberg", "chain-heisenberg", "planar", "complete-heisenberg")
GRAPH_FAMILIES = ("complete", "cycle", "grid", "random-regular", "erdos-renyi", "edge")


def from_pauli_strings(
    n: int,
    k: int,
    entries: Iterable[Tuple[Sequence[int], str, float]],
    d: int = 2,
) -> LocalHamiltonian:
    """H = Σ coeff · σ^{labels} на носителях; одинаковые носители складываются."""
    terms = [(support, coeff * pauli_string(labels, d)) for support, labels, coeff in entries]
    return LocalHamiltonian.from_terms(n, d, k, terms)


def heisenberg_term(d: int = 2) -> np.ndarray:
    """(XX + YY + ZZ)/3, спектральная норма 1."""
    if d != 2:
        raise ParameterError("Heisenberg terms are generated for qubits only")
    return (pauli_string("XX") + pauli_string("YY") + pauli_string("ZZ")) / 3.0


def _normalize(matrix: np.ndarray) -> np.ndarray:
    norm = float(np.max(np.abs(np.linalg.eigvalsh(matrix))))
    return matrix / norm if norm > 0 else matrix


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return _normalize(0.5 * (g + g.conj().T))


def complete_random(n: int, seed: int, d: int = 2, k: int = 2) -> LocalHamiltonian:
    """Случайные эрмитовы члены единичной нормы на всех k-подмножествах."""
    if n < k:
        raise ParameterError(f"Need n >= k, got n={n}, k={k}")
    rng = make_rng(seed, "complete", n, d, k)
    terms = []
    for support in _k_subsets(n, k):
        terms.append((support, random_hermitian(d ** k, rng)))
    return LocalHamiltonian.from_terms(n, d, k, terms)


def uniform_complete(n: int, labels: str = "ZZ", weight: float = 1.0) -> LocalHamiltonian:
    """Один и тот же член weight·σ^{labels} на каждой паре полного графа."""
    if abs(weight) > 1:
        raise ParameterError("Term weight must satisfy |weight| <= 1")
    return from_pauli_strings(n, 2, [((u, v), labels, weight) for u, v in _k_subsets(n, 2)])


def complete_heisenberg(n: int) -> LocalHamiltonian:
    term = heisenberg_term()
    return LocalHamiltonian.from_terms(n, 2, 2, [((u, v), term) for u, v in _k_subsets(n, 2)])


def graph_heisenberg(graph: nx.Graph) -> LocalHamiltonian:
    nodes = sorted(graph.nodes())
    index = {v: i for i, v in enumerate(nodes)}
    term = heisenberg_term()
    terms = []
    for u, v in graph.edges():
        a, b = sorted((index[u], index[v]))
        terms.append(((a, b), term))
    return LocalHamiltonian.from_terms(len(nodes), 2, 2, terms)


def grid_heisenberg(rows: int, cols: int) -> LocalHamiltonian:
    if rows < 1 or cols < 1:
        raise ParameterError("Grid dimensions must be positive")
    graph = nx.grid_2d_graph(rows, cols)
    relabeled = nx.convert_node_labels_to_integers(graph, ordering="sorted")
    return graph_heisenberg(relabeled)


def chain_heisenberg(n: int, periodic: bool = False) -> LocalHamiltonian:
    graph = nx.cycle_graph(n) if periodic and n > 2 else nx.path_graph(n)
    return graph_heisenberg(graph)


def planar_heisenberg(n: int, seed: int) -> LocalHamiltonian:
    """Триангуляция Делоне случайных точек на квадрате; члены Гейзенберга."""
    if n < 3:
        raise ParameterError("Planar family needs n >= 3")
    rng = make_rng(seed, "planar", n)
    points = rng.uniform(size=(n, 2))
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for simplex in Delaunay(points).simplices:
        a, b, c = (int(x) for x in simplex)
        graph.add_edges_from([(a, b), (b, c), (a, c)])
    return graph_heisenberg(graph)


def qmc_graph(family: str, n: int, seed: int, degree: int = 3, p: float = 0.5, weighted: bool = False) -> WeightedGraph:
    """
    Графы для Quantum Max-Cut.

    Args:
        family: complete, cycle, grid, random-regular, erdos-renyi, edge
        n: Число вершин (для grid - сторона квадрата)
        seed: Базовый seed
        degree: Степень для random-regular
        p: Вероятность ребра для erdos-renyi
        weighted: Случайные веса в (0, 1] вместо единичных
    """
    graph_seed = make_rng(seed, "qmc-graph", family, n).integers(2 ** 31)
    if family == "complete":
        graph = nx.complete_graph(n)
    elif family == "cycle":
        graph = nx.cycle_graph(n)
    elif family == "grid":
        graph = nx.convert_node_labels_to_integers(nx.grid_2d_graph(n, n), ordering="sorted")
    elif family == "random-regular":
        graph = nx.random_regular_graph(degree, n, seed=int(graph_seed))
    elif family == "erdos-renyi":
        graph = nx.gnp_random_graph(n, p, seed=int(graph_seed))
    elif family == "edge":
        graph = nx.path_graph(2)
    else:
        raise ParameterError(f"Unknown graph family {family!r}; expected one of {GRAPH_FAMILIES}")

    rng = make_rng(seed, "qmc-weights", family, n)
    edges: List[Tuple[int, int, float]] = []
    for u, v in sorted(tuple(sorted(e)) for e in graph.edges()):
        w = 1.0 - float(rng.uniform()) if weighted else 1.0
        edges.append((u, v, w))
    return WeightedGraph.from_edges(graph.number_of_nodes(), edges)


def generate(family: str, params: Dict, seed: int) -> LocalHamiltonian:
    """Единая точка входа для команды gen."""
    logger.info(f"Generating family={family} params={params} seed={seed}")
    if family == "complete":
        return complete_random(int(params.get("n", 6)), seed, d=int(params.get("d", 2)), k=int(params.get("k", 2)))
    if family == "uniform-complete":
        return uniform_complete(int(params.get("n", 6)), str(params.get("labels", "ZZ")), float(params.get("weight", 1.0)))
    if family == "complete-heisenberg":
        return complete_heisenberg(int(params.get("n", 6)))
    if family == "grid-heisenberg":
        return grid_heisenberg(int(params.get("rows", 3)), int(params.get("cols", 3)))
    if family == "chain-heisenberg":
        return chain_heisenberg(int(params.get("n", 6)), str(params.get("periodic", "false")).lower() == "true")
    if family == "planar":
        return planar_heisenberg(int(params.get("n", 9)), seed)
    raise ParameterError(f"Unknown family {family!r}; expected one of {HAMILTONIAN_FAMILIES}")


def _k_subsets(n: int, k: int) -> List[Tuple[int, ...]]:
    return list(itertools.combinations(range(n), k))
