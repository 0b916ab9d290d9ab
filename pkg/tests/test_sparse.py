"""
Тесты разреженного конвейера: слоение, древесные декомпозиции,
сепараторы и точные решатели по кластерам.
"""
import math
import sys
from pathlib import Path
from unittest.mock import patch

import networkx as nx
import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parent.parent
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from controllers.generators import from_pauli_strings, grid_heisenberg
from hamiltonian.states import DenseState
from sparse.clusters import (
    ClusteredState,
    cluster_fe,
    cluster_gs,
    max_cluster_qudits,
    plan_pipeline,
    reduced_density,
)
from sparse.layering import baker_layering
from sparse.separators import ClusterPartition, components_after, partition_from_removals, recursive_separators
from sparse.treedecomp import TreeDecomposition, tree_decompose_heuristic, validate_tree_decomposition
from utils.errors import InvariantViolation, ParameterError, SizeLimitError


def zz_chain(n: int, weights):
    return from_pauli_strings(n, 2, [((i, i + 1), "ZZ", w) for i, w in enumerate(weights) if w])


class TestBakerLayering:
    """Удаление класса межслойных рёбер"""

    def test_path(self):
        layering = baker_layering(nx.path_graph(10), 2, seed=4)
        assert layering.total_weight == 9.0
        assert layering.removed_weight <= 9.0 / 3 + 1e-12
        assert sorted(v for c in layering.components for v in c) == list(range(10))

    def test_path_every_fifth_layer(self):
        for seed in range(5):
            layering = baker_layering(nx.path_graph(10), 4, seed=seed)
            assert len(layering.removed_edges) <= 2

    def test_single_vertex(self):
        g = nx.Graph()
        g.add_node(0)
        layering = baker_layering(g, 2)
        assert layering.removed_edges == []
        assert layering.components == [[0]]

    def test_star_loses_nothing(self):
        for seed in range(5):
            layering = baker_layering(nx.star_graph(6), 2, seed=seed)
            assert layering.removed_edges == []
            assert layering.removed_weight == 0.0

    def test_weighted_bound(self):
        g = nx.grid_2d_graph(4, 5)
        g = nx.convert_node_labels_to_integers(g)
        for i, (u, v) in enumerate(g.edges()):
            g[u][v]["weight"] = 1.0 + (i % 3)
        layering = baker_layering(g, 3, seed=1)
        assert layering.removed_weight <= layering.total_weight / 4 + 1e-12

    def test_components_per_root(self):
        g = nx.disjoint_union(nx.path_graph(3), nx.cycle_graph(4))
        layering = baker_layering(g, 1)
        assert len(layering.roots) == 2
        assert len(layering.offsets) == 2

    def test_deterministic(self):
        g = nx.cycle_graph(12)
        assert baker_layering(g, 2, seed=7).to_dict() == baker_layering(g, 2, seed=7).to_dict()

    def test_bad_kparam(self):
        with pytest.raises(ParameterError):
            baker_layering(nx.path_graph(3), 0)


class TestTreeDecomposition:
    """Эвристика min-fill и проверка определения"""

    @pytest.mark.parametrize(
        "graph, width",
        [(nx.path_graph(6), 1), (nx.balanced_tree(2, 3), 1), (nx.cycle_graph(7), 2), (nx.complete_graph(5), 4)],
    )
    def test_known_widths(self, graph, width):
        td = tree_decompose_heuristic(graph)
        assert td.width == width
        assert validate_tree_decomposition(graph, td).ok

    def test_empty_graph(self):
        td = tree_decompose_heuristic(nx.Graph())
        assert td.width == -1
        assert validate_tree_decomposition(nx.Graph(), td).ok

    @pytest.mark.parametrize("seed", range(200))
    def test_random_graphs_valid(self, seed):
        g = nx.gnp_random_graph(9, 0.3, seed=seed)
        assert validate_tree_decomposition(g, tree_decompose_heuristic(g)).ok

    def test_violations_reported(self):
        g = nx.path_graph(4)
        td = TreeDecomposition(bags=[frozenset({0, 1}), frozenset({2, 3}), frozenset({1, 3})], tree=nx.path_graph(3))
        result = validate_tree_decomposition(g, td)
        assert not result.ok
        assert any(v.startswith("edge: (1, 2)") for v in result.violations)
        assert any(v.startswith("running intersection") for v in result.violations)

    def test_uncovered_vertex(self):
        g = nx.path_graph(3)
        td = TreeDecomposition(bags=[frozenset({0, 1})], tree=nx.path_graph(1))
        violations = validate_tree_decomposition(g, td).violations
        assert "coverage: vertex 2 is in no bag" in violations


class TestSeparators:
    """Рекурсивные сепараторы и разбиения"""

    def test_path_sixteen(self):
        g = nx.path_graph(16)
        partition = recursive_separators(g, tree_decompose_heuristic(g), 4)
        assert len(partition.removed_vertices) <= 4
        assert all(len(c) <= 4 for c in partition.clusters)
        covered = sorted(v for unit in partition.units() for v in unit)
        assert covered == list(range(16))

    def test_grid(self):
        g = nx.convert_node_labels_to_integers(nx.grid_2d_graph(4, 4), ordering="sorted")
        td = tree_decompose_heuristic(g)
        partition = recursive_separators(g, td, max(6, td.width + 1))
        assert all(len(c) <= max(6, td.width + 1) for c in partition.clusters)
        for a in range(len(partition.clusters)):
            for b in range(a + 1, len(partition.clusters)):
                assert not any(g.has_edge(u, v) for u in partition.clusters[a] for v in partition.clusters[b])

    def test_r_below_bag_size(self):
        g = nx.complete_graph(5)
        with pytest.raises(ParameterError):
            recursive_separators(g, tree_decompose_heuristic(g), 3)

    def test_overlapping_clusters_rejected(self):
        with pytest.raises(InvariantViolation):
            ClusterPartition(n=3, clusters=[[0, 1], [1, 2]])
        with pytest.raises(InvariantViolation):
            ClusterPartition(n=3, clusters=[[0, 1]], removed_vertices=[1])

    def test_pruned_keeps_inner_terms(self):
        H = zz_chain(4, [1.0, 0.5, 1.0])
        partition = partition_from_removals(nx.path_graph(4), removed_edges=[(1, 2)])
        assert partition.clusters == [[0, 1], [2, 3]]
        H_prime, budget = partition.pruned(H)
        assert H_prime.m == 2
        assert budget == pytest.approx(0.5)
        partition.check_independent(H_prime)

    def test_components_after(self):
        assert components_after(nx.path_graph(5), removed_vertices=[2]) == [[0, 1], [3, 4]]


class TestClusterSolvers:
    """Точные решатели по кластерам и цепочки оценок"""

    def test_reduced_density_of_bell_state(self):
        bell = DenseState.pure(np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2), 2, 2)
        assert np.allclose(reduced_density(bell, [1]), np.eye(2) / 2)
        mixed = DenseState.mixed(np.outer(bell.vector, bell.vector.conj()), 2, 2)
        assert np.allclose(reduced_density(mixed, [0]), np.eye(2) / 2)

    def test_marginal_across_blocks(self):
        up = DenseState.pure(np.array([1.0, 0.0]), 1, 2)
        down = DenseState.pure(np.array([0.0, 1.0]), 1, 2)
        state = ClusteredState(n=2, d=2, units=[[0], [1]], blocks=[up, down])
        expected = np.zeros((4, 4))
        expected[2, 2] = 1.0
        assert np.allclose(state.marginal([1, 0]), expected)
        with pytest.raises(ParameterError):
            state.marginal([5])

    def test_ground_chain(self):
        H = zz_chain(4, [1.0, 0.5, 1.0])
        partition = partition_from_removals(nx.path_graph(4), removed_edges=[(1, 2)])
        energy, state, report = cluster_gs(H, partition)
        assert energy == pytest.approx(-2.0)
        assert report["budget"] == pytest.approx(0.5)
        assert report["exact_energy"] == pytest.approx(-2.5)
        assert report["weyl_ok"] and report["sandwich_ok"]

    def test_free_energy_of_independent_clusters(self):
        beta = 0.7
        H = zz_chain(4, [1.0, 0.0, 1.0])
        partition = partition_from_removals(nx.path_graph(4), removed_edges=[(1, 2)])
        value, _, report = cluster_fe(H, partition, beta)
        expected = -2 * math.log(4 * math.cosh(beta)) / beta
        assert value == pytest.approx(expected, abs=1e-9)
        assert report["free_energy_prime"] == pytest.approx(expected, abs=1e-9)
        assert report["budget"] == 0.0

    def test_free_qudit(self):
        H = zz_chain(3, [1.0, 1.0])
        partition = ClusterPartition(n=3, clusters=[[0, 1]], removed_vertices=[2])
        value, state, report = cluster_fe(H, partition, 1.0)
        assert report["free_energy_prime"] == pytest.approx(-math.log(4 * math.cosh(1.0)) - math.log(2.0), abs=1e-9)
        assert report["budget"] == pytest.approx(1.0)
        assert report["sandwich_ok"]

    def test_partition_must_cover(self):
        H = zz_chain(3, [1.0, 1.0])
        with pytest.raises(ParameterError):
            cluster_gs(H, ClusterPartition(n=3, clusters=[[0, 1]]))

    def test_cluster_size_limit(self):
        H = zz_chain(4, [1.0, 0.0, 1.0])
        partition = partition_from_removals(nx.path_graph(4), removed_edges=[(1, 2)])
        with patch("config.CLUSTER_MAX_QUDITS", 1):
            with pytest.raises(SizeLimitError) as info:
                cluster_gs(H, partition)
        assert info.value.limit_name == "CLUSTER_MAX_QUDITS"

    def test_mixed_cluster_limit(self):
        H = zz_chain(4, [1.0, 0.0, 1.0])
        partition = partition_from_removals(nx.path_graph(4), removed_edges=[(1, 2)])
        with patch("config.DENSE_MIXED_MAX_DIM", 2):
            with pytest.raises(SizeLimitError) as info:
                cluster_fe(H, partition, 1.0)
            energy, _, _ = cluster_gs(H, partition)
        assert info.value.limit_name == "DENSE_MIXED_MAX_DIM"
        assert "Cluster 0" in str(info.value)
        assert energy == pytest.approx(-2.0)

    def test_max_cluster_qudits(self):
        assert max_cluster_qudits(2) == 14
        assert max_cluster_qudits(2, mixed=True) == 12
        assert max_cluster_qudits(4) == 7
        assert max_cluster_qudits(4, mixed=True) == 6


class TestPipeline:
    """Слоение, декомпозиция и сепараторы вместе"""

    def test_grid_heisenberg_free_energy(self):
        H = grid_heisenberg(3, 3)
        partition, plan = plan_pipeline(H, 2, seed=0, r=5, mixed=True)
        assert plan["tree_decomposition_valid"]
        assert all(len(c) <= 5 for c in partition.clusters)
        value, _, report = cluster_fe(H, partition, 2.0)
        assert report["sandwich_ok"]
        assert value >= report["exact_free_energy"] - 1e-9
        assert plan["implied_eps"] == pytest.approx(plan["budget"] / H.J1)

    def test_grid_heisenberg_ground(self):
        H = grid_heisenberg(3, 3)
        partition, plan = plan_pipeline(H, 2, seed=3)
        energy, _, report = cluster_gs(H, partition)
        assert report["weyl_ok"]
        assert abs(report["exact_energy"] - energy) <= plan["budget"] + 1e-9

    def test_eps_target_shrinks_clusters(self):
        H = grid_heisenberg(3, 3)
        _, plan = plan_pipeline(H, 2, eps_target=1.0)
        assert plan["r"] <= max(4, plan["width"] + 1)
