"""
Взвешенные графы и пороговый ранг нормированной матрицы смежности.

Эффективная степень d_u = Σ_v |J_uv|, J_D = D^{-1/2} J D^{-1/2};
t_δ = Σ_{|λ_i| ≥ δ} λ_i².
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import networkx as nx
import numpy as np

from hamiltonian.model import LocalHamiltonian, interaction_matrix
from utils.errors import GraphError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
SPECTRUM_SLACK = 1e-9


@dataclass(eq=False)
class WeightedGraph:
    n: int
    J: np.ndarray

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float)
        if self.J.shape != (self.n, self.n):
            raise GraphError(f"Weight matrix shape {self.J.shape} does not match n={self.n}")
        if np.max(np.abs(self.J - self.J.T), initial=0.0) > SYMMETRY_TOL:
            raise GraphError("Weight matrix is not symmetric")
        if np.max(np.abs(np.diag(self.J)), initial=0.0) > 0:
            raise GraphError("Weight matrix has a nonzero diagonal (self-loop)")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]]) -> "WeightedGraph":
        J = np.zeros((n, n))
        for edge in edges:
            u, v, w = int(edge[0]), int(edge[1]), float(edge[2])
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"Edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"Self-loop at vertex {u}")
            J[u, v] += w
            J[v, u] += w
        return cls(n=n, J=J)

    @classmethod
    def from_hamiltonian(cls, H: LocalHamiltonian) -> "WeightedGraph":
        """Граф сил взаимодействия J_uv = ‖h_(u,v)‖ 2-локального гамильтониана."""
        return cls(n=H.n, J=interaction_matrix(H))

    @property
    def degrees(self) -> np.ndarray:
        return np.sum(np.abs(self.J), axis=1)

    @property
    def total_weight(self) -> float:
        """|J|_1 = Σ_{u,v} |J_uv| (каждое ребро учитывается дважды)."""
        return float(np.sum(np.abs(self.J)))

    def edges(self) -> List[Tuple[int, int, float]]:
        iu, iv = np.nonzero(np.triu(self.J, k=1))
        return [(int(u), int(v), float(self.J[u, v])) for u, v in zip(iu, iv)]

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_weighted_edges_from(self.edges())
        return G

    def to_dict(self) -> Dict:
        return {"n": self.n, "edges": [[u, v, w] for u, v, w in self.edges()]}


@dataclass(eq=False)
class ThresholdProfile:
    eigenvalues: np.ndarray
    active: List[int]
    ranks: Dict[float, float] = field(default_factory=dict)

    def t(self, delta: float) -> float:
        lam = self.eigenvalues
        return float(np.sum(lam[np.abs(lam) >= delta] ** 2))

    def to_dict(self) -> Dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "active_vertices": self.active,
            "threshold_ranks": {str(k): v for k, v in self.ranks.items()},
        }


def active_vertices(g: WeightedGraph) -> List[int]:
    """Вершины с ненулевой эффективной степенью; изолированные отбрасываются."""
    return [int(u) for u in np.nonzero(g.degrees > 0)[0]]


def normalized_adjacency(g: WeightedGraph) -> Tuple[np.ndarray, List[int]]:
    """
    J_D на активных вершинах.

    Returns:
        Tuple: (J_D, список активных вершин)
    """
    active = active_vertices(g)
    if not active:
        return np.zeros((0, 0)), []
    sub = g.J[np.ix_(active, active)]
    deg = g.degrees[active]
    if np.any(deg <= 0):
        raise GraphError("Interacting vertex with zero effective degree")
    scale = 1.0 / np.sqrt(deg)
    return scale[:, None] * sub * scale[None, :], active


def threshold_rank(g: WeightedGraph, delta) -> ThresholdProfile:
    """
    Профиль порогового ранга.

    Args:
        g: Взвешенный граф
        delta: Порог или список порогов

    Returns:
        ThresholdProfile: собственные значения J_D и t_δ для каждого δ
    """
    deltas = [float(x) for x in (delta if isinstance(delta, (list, tuple)) else [delta])]
    JD, active = normalized_adjacency(g)
    eigenvalues = np.linalg.eigvalsh(JD) if active else np.zeros(0)
    if eigenvalues.size and np.max(np.abs(eigenvalues)) > 1 + SPECTRUM_SLACK:
        raise GraphError(f"Normalized spectrum escapes [-1, 1]: {np.max(np.abs(eigenvalues))}")
    profile = ThresholdProfile(eigenvalues=eigenvalues, active=active)
    for value in deltas:
        profile.ranks[value] = profile.t(value)
    logger.debug(f"Threshold profile on {len(active)} active vertices: {profile.ranks}")
    return profile
