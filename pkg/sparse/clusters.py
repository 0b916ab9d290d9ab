"""
Точные решатели по кластерам и конвейер разбиения для разреженных графов.

H′ содержит только внутрикластерные члены; каждый кластер
диагонализуется отдельно, удалённые вершины остаются свободными
кудитами. Бюджет Вейля - сумма норм выброшенных членов.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from hamiltonian.model import LocalHamiltonian, interaction_graph
from hamiltonian.oracles import check_beta, exact_free_energy, exact_ground, gibbs_state
from hamiltonian.states import DenseState, von_neumann_entropy
from sparse.layering import baker_layering, prune_edges
from sparse.separators import ClusterPartition, recursive_separators
from sparse.treedecomp import tree_decompose_heuristic, validate_tree_decomposition
from utils.errors import InvariantViolation, ParameterError, SizeLimitError
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)

CHAIN_TOL = 1e-9


@dataclass(eq=False)
class ClusteredState:
    """Произведение состояний блоков; blocks[i] задан на кудитах units[i]."""

    n: int
    d: int
    units: List[List[int]]
    blocks: List[DenseState]
    _owner: Dict[int, Tuple[int, int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for b, unit in enumerate(self.units):
            for pos, v in enumerate(unit):
                self._owner[v] = (b, pos)

    def marginal(self, qudits: Sequence[int]) -> np.ndarray:
        """Приведённая матрица плотности на qudits в заданном порядке."""
        groups: Dict[int, List[int]] = {}
        for v in qudits:
            if v not in self._owner:
                raise ParameterError(f"Qudit {v} is not covered by the clustered state")
            b, _ = self._owner[v]
            groups.setdefault(b, []).append(v)
        rho = np.ones((1, 1), dtype=complex)
        order: List[int] = []
        for b, members in groups.items():
            positions = [self._owner[v][1] for v in members]
            rho = np.kron(rho, reduced_density(self.blocks[b], positions))
            order.extend(members)
        m = len(order)
        perm = [order.index(v) for v in qudits]
        tensor = rho.reshape((self.d,) * (2 * m)).transpose(perm + [m + p for p in perm])
        return tensor.reshape(self.d ** m, self.d ** m)

    def entropy(self) -> float:
        return float(sum(block.entropy() for block in self.blocks))

    def to_dict(self) -> Dict:
        return {"units": self.units, "pure": [b.is_pure for b in self.blocks]}


def reduced_density(state: DenseState, keep: Sequence[int]) -> np.ndarray:
    """Частичный след по кудитам вне keep; порядок результата следует keep."""
    n, d = state.n, state.d
    keep = list(keep)
    rest = [i for i in range(n) if i not in keep]
    m = len(keep)
    if state.is_pure:
        psi = state.vector.reshape((d,) * n).transpose(keep + rest).reshape(d ** m, -1)
        return psi @ psi.conj().T
    tensor = state.matrix.reshape((d,) * (2 * n))
    tensor = tensor.transpose(keep + rest + [n + i for i in keep + rest])
    tensor = tensor.reshape(d ** m, d ** (n - m), d ** m, d ** (n - m))
    return np.einsum("aibi->ab", tensor)


def clustered_energy(H: LocalHamiltonian, state: ClusteredState) -> float:
    """Tr[Hσ] для кластерного произведённого состояния по маргиналам."""
    total = 0.0
    for term in H.terms:
        total += float(np.real(np.trace(term.matrix @ state.marginal(term.support))))
    return total


def _check_clusters(partition: ClusterPartition, d: int, mixed: bool = False) -> None:
    qubits = int(round(math.log2(d)))
    for index, cluster in enumerate(partition.clusters):
        if len(cluster) * qubits > config.CLUSTER_MAX_QUDITS:
            raise SizeLimitError(
                f"Cluster {index} has {len(cluster)} qudits ({len(cluster) * qubits} qubits), "
                f"above the dense cluster limit",
                "CLUSTER_MAX_QUDITS",
                config.CLUSTER_MAX_QUDITS,
            )
        if mixed and d ** len(cluster) > config.DENSE_MIXED_MAX_DIM:
            raise SizeLimitError(
                f"Cluster {index} has dimension {d ** len(cluster)}, above the dense mixed-state limit",
                "DENSE_MIXED_MAX_DIM",
                config.DENSE_MIXED_MAX_DIM,
            )


def _prepare(
    H: LocalHamiltonian, partition: ClusterPartition, mixed: bool = False
) -> Tuple[LocalHamiltonian, float, List[List[int]]]:
    if partition.n != H.n:
        raise ParameterError(f"Partition covers {partition.n} qudits, Hamiltonian has {H.n}")
    covered = sorted(v for unit in partition.units() for v in unit)
    if covered != list(range(H.n)):
        raise ParameterError("Partition units must cover every qudit exactly once")
    _check_clusters(partition, H.d, mixed)
    H_prime, budget = partition.pruned(H)
    partition.check_independent(H_prime)
    return H_prime, budget, partition.units()


def _full_checkable(H: LocalHamiltonian, check_full: Optional[bool]) -> bool:
    if check_full is not None:
        return check_full
    return H.dim <= config.DENSE_MIXED_MAX_DIM


def cluster_gs(
    H: LocalHamiltonian,
    partition: ClusterPartition,
    check_full: Optional[bool] = None,
) -> Tuple[float, ClusteredState, Dict]:
    """
    Основные состояния кластеров H′.

    Args:
        H: Гамильтониан
        partition: Разбиение на кластеры
        check_full: Проверять цепочку Вейля по точному λ_min(H)
            (по умолчанию, если H помещается в плотный предел)

    Returns:
        Tuple: (λ_min(H′), кластерное состояние σ, отчёт)

    Raises:
        SizeLimitError: кластер больше CLUSTER_MAX_QUDITS
        InvariantViolation: нарушена цепочка Вейля
    """
    H_prime, budget, units = _prepare(H, partition)

    def solve(unit: List[int]) -> Tuple[float, DenseState]:
        H_unit, _ = H_prime.restrict(unit)
        return exact_ground(H_unit)

    solved = ordered_map(solve, units)
    energy_prime = float(sum(e for e, _ in solved))
    state = ClusteredState(n=H.n, d=H.d, units=units, blocks=[s for _, s in solved])
    energy_sigma = clustered_energy(H, state)
    report: Dict = {
        "energy_prime": energy_prime,
        "energy_sigma": energy_sigma,
        "budget": budget,
        "clusters": len(partition.clusters),
        "free_qudits": len(partition.removed_vertices),
        "dropped_terms": H.m - H_prime.m,
        "partition": partition.to_dict(),
    }
    if abs(energy_sigma - energy_prime) > budget + CHAIN_TOL:
        raise InvariantViolation(f"|E(sigma) - E'| = {abs(energy_sigma - energy_prime)} exceeds budget {budget}")
    if _full_checkable(H, check_full):
        exact = exact_ground(H)[0]
        report["exact_energy"] = exact
        report["weyl_ok"] = abs(exact - energy_prime) <= budget + CHAIN_TOL
        report["sandwich_ok"] = exact - CHAIN_TOL <= energy_sigma <= exact + 2 * budget + CHAIN_TOL
        if not (report["weyl_ok"] and report["sandwich_ok"]):
            raise InvariantViolation(f"Weyl chain violated: exact {exact}, H' {energy_prime}, sigma {energy_sigma}")
    logger.info(f"Cluster ground energy {energy_prime:.6f}, sigma energy {energy_sigma:.6f}, budget {budget:.4g}")
    return energy_prime, state, report


def cluster_fe(
    H: LocalHamiltonian,
    partition: ClusterPartition,
    beta: float,
    check_full: Optional[bool] = None,
) -> Tuple[float, ClusteredState, Dict]:
    """
    Состояния Гиббса кластеров H′; свободные кудиты дают -ln d/β каждый.

    Returns:
        Tuple: (f(σ) = Tr[Hσ] - S(σ)/β, кластерное состояние σ, отчёт с F(H′))
    """
    check_beta(beta)
    H_prime, budget, units = _prepare(H, partition, mixed=True)

    def solve(unit: List[int]) -> Tuple[float, DenseState]:
        H_unit, _ = H_prime.restrict(unit)
        return exact_free_energy(H_unit, beta), gibbs_state(H_unit, beta)

    solved = ordered_map(solve, units)
    free_prime = float(sum(f for f, _ in solved))
    state = ClusteredState(n=H.n, d=H.d, units=units, blocks=[s for _, s in solved])
    f_sigma = clustered_energy(H, state) - state.entropy() / beta
    report: Dict = {
        "free_energy_prime": free_prime,
        "free_energy_sigma": f_sigma,
        "beta": beta,
        "budget": budget,
        "clusters": len(partition.clusters),
        "free_qudits": len(partition.removed_vertices),
        "dropped_terms": H.m - H_prime.m,
        "partition": partition.to_dict(),
    }
    if _full_checkable(H, check_full):
        exact = exact_free_energy(H, beta)
        report["exact_free_energy"] = exact
        report["sandwich_ok"] = exact - CHAIN_TOL <= f_sigma <= exact + 2 * budget + CHAIN_TOL
        if not report["sandwich_ok"]:
            raise InvariantViolation(f"Free-energy chain violated: exact {exact}, f(sigma) {f_sigma}, budget {budget}")
    logger.info(f"Cluster free energy f(sigma)={f_sigma:.6f}, F(H')={free_prime:.6f}, budget {budget:.4g}")
    return f_sigma, state, report


def max_cluster_qudits(d: int, mixed: bool = False) -> int:
    """Наибольший размер кластера, который решается плотно."""
    qubits = int(round(math.log2(d)))
    limit = config.CLUSTER_MAX_QUDITS // qubits
    if mixed:
        limit = min(limit, int(math.floor(math.log(config.DENSE_MIXED_MAX_DIM, d) + 1e-9)))
    return max(limit, 1)


def plan_pipeline(
    H: LocalHamiltonian,
    kparam: int,
    seed: int = 0,
    r: Optional[int] = None,
    eps_target: Optional[float] = None,
    mixed: bool = False,
) -> Tuple[ClusterPartition, Dict]:
    """
    Слоение → древесная декомпозиция → сепараторы.

    Args:
        H: Гамильтониан
        kparam: Параметр слоения
        seed: Seed корней BFS
        r: Явный размер кластера (иначе наибольший допустимый)
        eps_target: Желаемая точность; r ≈ Δ/eps², урезанный пределом
        mixed: Кластеры будут решаться как состояния Гиббса

    Returns:
        Tuple: (разбиение, отчёт с шириной и подразумеваемым eps)
    """
    g = interaction_graph(H)
    layering = baker_layering(g, kparam, seed)
    pruned = prune_edges(g, layering.removed_edges)
    td = tree_decompose_heuristic(pruned)
    validation = validate_tree_decomposition(pruned, td)
    if not validation.ok:
        raise InvariantViolation(f"Heuristic tree decomposition is invalid: {validation.violations}")

    cap = max_cluster_qudits(H.d, mixed)
    if r is None:
        r = cap
        if eps_target is not None:
            degree = max((deg for _, deg in g.degree()), default=0)
            wanted = int(math.ceil(max(degree, 1) / eps_target ** 2))
            if wanted > cap:
                logger.warning(f"Cluster size {wanted} for eps={eps_target} exceeds the dense cap {cap}")
            r = min(cap, wanted)
        r = max(r, td.width + 1)
    if td.width + 1 > cap:
        raise SizeLimitError(f"Tree-decomposition width {td.width} leaves bags above the cluster cap", "CLUSTER_MAX_QUDITS", cap)

    separated = recursive_separators(pruned, td, r)
    partition = ClusterPartition(
        n=H.n,
        clusters=separated.clusters,
        removed_vertices=separated.removed_vertices,
        removed_edges=list(layering.removed_edges),
        r=r,
        separator_bound=separated.separator_bound,
    )
    _, budget = partition.pruned(H)
    report = {
        "kparam": kparam,
        "r": r,
        "width": td.width,
        "layering": layering.to_dict(),
        "tree_decomposition_valid": validation.ok,
        "removed_vertex_count": len(partition.removed_vertices),
        "separator_bound": separated.separator_bound,
        "budget": budget,
        "implied_eps": budget / H.J1 if H.J1 > 0 else 0.0,
    }
    logger.info(f"Sparse pipeline: width {td.width}, r={r}, budget {budget:.4g}")
    return partition, report
