"""
Представление k-локального гамильтониана H = Σ_e h_e.

Каждый член h_e задан носителем (строго возрастающий кортеж индексов кудитов)
и эрмитовой матрицей d^k × d^k. Дубликаты носителей складываются при
построении, члены нулевой нормы отбрасываются.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from utils.constants import HERMITIAN_TOL
from utils.errors import HamiltonianError, ParameterError, UnsupportedDimensionError

logger = logging.getLogger(__name__)

ZERO_NORM_TOL = 1e-14


def qubits_per_qudit(d: int) -> int:
    """
    Число кубитов в кудите размерности d = 2^q.

    Raises:
        UnsupportedDimensionError: если d не степень двойки
    """
    if d < 2 or (d & (d - 1)) != 0:
        raise UnsupportedDimensionError(f"Local dimension d={d} is not a power of 2")
    return d.bit_length() - 1


@dataclass(frozen=True, eq=False)
class LocalTerm:
    """Член h_e = H_e ⊗ I_{V\\e}."""

    support: Tuple[int, ...]
    matrix: np.ndarray

    @property
    def k(self) -> int:
        return len(self.support)

    def norm(self) -> float:
        """Спектральная норма (максимум модуля собственных значений)."""
        if self.matrix.size == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))


@dataclass(eq=False)
class LocalHamiltonian:
    n: int
    d: int
    k: int
    terms: Tuple[LocalTerm, ...]
    norms: np.ndarray = field(repr=False)
    _cache: Dict[str, object] = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_terms(
        cls,
        n: int,
        d: int,
        k: int,
        terms: Iterable[Tuple[Sequence[int], np.ndarray]],
    ) -> "LocalHamiltonian":
        """
        Строит гамильтониан с проверкой инвариантов.

        Args:
            n: Число кудитов
            d: Локальная размерность (степень двойки)
            k: Локальность
            terms: Пары (носитель, матрица)

        Returns:
            LocalHamiltonian: Гамильтониан с объединёнными дубликатами

        Raises:
            HamiltonianError: неэрмитов член, неверный носитель или размер матрицы
        """
        if n < 1:
            raise ParameterError(f"Qudit count must be positive, got n={n}")
        if k < 1:
            raise ParameterError(f"Locality must be at least 1, got k={k}")
        qubits_per_qudit(d)
        dim = d ** k

        merged: Dict[Tuple[int, ...], np.ndarray] = {}
        for support, matrix in terms:
            support = tuple(int(u) for u in support)
            if len(support) != k:
                raise HamiltonianError(f"Term support {support} has locality {len(support)}, instance k={k}")
            if any(b <= a for a, b in zip(support, support[1:])):
                raise HamiltonianError(f"Term support {support} is not strictly increasing")
            if support[0] < 0 or support[-1] >= n:
                raise HamiltonianError(f"Term support {support} out of range for n={n}")
            matrix = np.asarray(matrix, dtype=complex)
            if matrix.shape != (dim, dim):
                raise HamiltonianError(f"Term on {support} has shape {matrix.shape}, expected {(dim, dim)}")
            if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > HERMITIAN_TOL:
                raise HamiltonianError(f"Term on {support} is not Hermitian")
            matrix = 0.5 * (matrix + matrix.conj().T)
            if support in merged:
                merged[support] = merged[support] + matrix
            else:
                merged[support] = matrix

        kept: List[LocalTerm] = []
        for support in sorted(merged):
            term = LocalTerm(support=support, matrix=merged[support])
            if np.max(np.abs(term.matrix), initial=0.0) <= ZERO_NORM_TOL:
                continue
            kept.append(term)

        dropped = len(merged) - len(kept)
        if dropped:
            logger.debug(f"Dropped {dropped} zero-norm terms")
        norms = np.array([t.norm() for t in kept], dtype=float)
        return cls(n=n, d=d, k=k, terms=tuple(kept), norms=norms)

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def J1(self) -> float:
        """|J|_1 = Σ_e ‖h_e‖."""
        return float(np.sum(self.norms))

    @property
    def JF(self) -> float:
        """‖J‖_F = (Σ_e ‖h_e‖²)^{1/2}."""
        return float(np.sqrt(np.sum(self.norms ** 2)))

    @property
    def dim(self) -> int:
        return self.d ** self.n

    def supports(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, self.k), dtype=int)
        return np.array([t.support for t in self.terms], dtype=int)

    def filter_terms(self, keep: Callable[[LocalTerm], bool]) -> "LocalHamiltonian":
        """Гамильтониан на тех же кудитах только с выбранными членами."""
        return LocalHamiltonian.from_terms(
            self.n, self.d, self.k, [(t.support, t.matrix) for t in self.terms if keep(t)]
        )

    def restrict(self, vertices: Sequence[int]) -> Tuple["LocalHamiltonian", List[int]]:
        """
        Ограничение на подмножество кудитов с перенумерацией 0..q-1.

        Сохраняются только члены, носитель которых целиком внутри vertices.

        Returns:
            Tuple: (H_Q, отсортированный список исходных индексов)
        """
        ordered = sorted(set(int(v) for v in vertices))
        index = {v: i for i, v in enumerate(ordered)}
        terms = [
            (tuple(index[u] for u in t.support), t.matrix)
            for t in self.terms
            if all(u in index for u in t.support)
        ]
        return LocalHamiltonian.from_terms(len(ordered), self.d, self.k, terms), ordered

    def scaled(self, factor: float) -> "LocalHamiltonian":
        return LocalHamiltonian.from_terms(
            self.n, self.d, self.k, [(t.support, factor * t.matrix) for t in self.terms]
        )

    def summary(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "d": self.d,
            "k": self.k,
            "m": self.m,
            "J1": self.J1,
            "JF": self.JF,
        }


def interaction_matrix(H: LocalHamiltonian) -> np.ndarray:
    """
    Симметричная матрица сил взаимодействия J_uv = ‖h_(u,v)‖ для 2-локальных H.

    Raises:
        ParameterError: если H не 2-локален
    """
    if H.k != 2:
        raise ParameterError(f"Interaction matrix is defined for 2-local instances, got k={H.k}")
    J = np.zeros((H.n, H.n))
    for term, norm in zip(H.terms, H.norms):
        u, v = term.support
        J[u, v] = norm
        J[v, u] = norm
    return J


def interaction_graph(H: LocalHamiltonian, removed: Optional[Iterable[int]] = None) -> nx.Graph:
    """
    Граф взаимодействий: вершины - кудиты, рёбра - пары внутри носителей.

    Вес ребра - сумма норм членов, содержащих пару. Члены с индексами
    из removed пропускаются.
    """
    skip = set(removed or ())
    G = nx.Graph()
    G.add_nodes_from(range(H.n))
    for idx, (term, norm) in enumerate(zip(H.terms, H.norms)):
        if idx in skip:
            continue
        support = term.support
        for i in range(len(support)):
            for j in range(i + 1, len(support)):
                u, v = support[i], support[j]
                weight = G[u][v]["weight"] + norm if G.has_edge(u, v) else norm
                G.add_edge(u, v, weight=weight)
    return G
