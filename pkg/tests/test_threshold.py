"""
Тесты порогового ранга, разложения с весами степеней и Quantum Max-Cut.
"""
import sys
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parent.parent
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from controllers.generators import complete_random, from_pauli_strings
from hamiltonian.oracles import exact_ground
from hamiltonian.states import random_product_state
from regularity.atlas import build_atlas
from threshold.decomposition import threshold_cut_decompose, truncated_adjacency
from threshold.graph import WeightedGraph, normalized_adjacency, threshold_rank
from threshold.qmc import grid_delta, qmc_decompose, qmc_estimate, qmc_hamiltonian, qmc_product_value
from utils.errors import GraphError, ParameterError
from utils.seeding import make_rng


def complete_graph(n: int) -> WeightedGraph:
    return WeightedGraph(n=n, J=np.ones((n, n)) - np.eye(n))


def cycle_graph(n: int) -> WeightedGraph:
    return WeightedGraph.from_edges(n, [(i, (i + 1) % n, 1.0) for i in range(n)])


def random_graph(seed: int, n: int = 8, p: float = 0.5) -> WeightedGraph:
    rng = make_rng(seed, "threshold-graph")
    edges = [(u, v, float(rng.uniform(0.1, 1.0))) for u in range(n) for v in range(u + 1, n) if rng.uniform() < p]
    return WeightedGraph.from_edges(n, edges)


class TestWeightedGraph:
    """Проверка входного графа"""

    def test_rejects_bad_matrices(self):
        with pytest.raises(GraphError):
            WeightedGraph(n=2, J=np.array([[0.0, 1.0], [0.5, 0.0]]))
        with pytest.raises(GraphError):
            WeightedGraph(n=2, J=np.eye(2))
        with pytest.raises(GraphError):
            WeightedGraph.from_edges(2, [(0, 2, 1.0)])
        with pytest.raises(GraphError):
            WeightedGraph.from_edges(2, [(1, 1, 1.0)])

    def test_degrees_and_total_weight(self):
        g = WeightedGraph.from_edges(3, [(0, 1, 2.0), (1, 2, 0.5)])
        assert g.degrees.tolist() == [2.0, 2.5, 0.5]
        assert g.total_weight == pytest.approx(5.0)
        assert g.edges() == [(0, 1, 2.0), (1, 2, 0.5)]

    def test_from_hamiltonian(self):
        H = from_pauli_strings(3, 2, [((0, 1), "ZZ", 2.0), ((1, 2), "ZZ", -0.5)])
        g = WeightedGraph.from_hamiltonian(H)
        assert g.n == 3
        assert g.J[0, 1] == pytest.approx(2.0)
        assert g.J[1, 2] == pytest.approx(0.5)
        assert g.J[0, 2] == 0.0
        with pytest.raises(ParameterError):
            WeightedGraph.from_hamiltonian(complete_random(4, seed=2, k=3))

    def test_networkx_view(self):
        G = cycle_graph(5).to_networkx()
        assert G.number_of_edges() == 5
        assert nx.is_connected(G)


class TestThresholdRank:
    """Спектр нормированной матрицы смежности"""

    @pytest.mark.parametrize("n", [3, 5, 8])
    def test_complete_graph_spectrum(self, n):
        profile = threshold_rank(complete_graph(n), [0.5, 1.0 / (n - 1)])
        assert profile.eigenvalues.max() == pytest.approx(1.0)
        assert np.allclose(sorted(profile.eigenvalues)[:-1], -1.0 / (n - 1))
        assert profile.ranks[1.0 / (n - 1)] == pytest.approx(1.0 + 1.0 / (n - 1))
        if n > 3:
            assert profile.ranks[0.5] == pytest.approx(1.0)

    def test_two_components(self):
        J = np.zeros((8, 8))
        J[:4, :4] = np.ones((4, 4)) - np.eye(4)
        J[4:, 4:] = np.ones((4, 4)) - np.eye(4)
        assert threshold_rank(WeightedGraph(n=8, J=J), 0.5).t(0.5) == pytest.approx(2.0)

    def test_isolated_vertices_dropped(self):
        g = WeightedGraph.from_edges(4, [(0, 1, 1.0)])
        JD, active = normalized_adjacency(g)
        assert active == [0, 1]
        assert np.allclose(JD, [[0.0, 1.0], [1.0, 0.0]])

    def test_empty_graph(self):
        profile = threshold_rank(WeightedGraph(n=3, J=np.zeros((3, 3))), 0.1)
        assert profile.eigenvalues.size == 0
        assert profile.ranks[0.1] == 0.0

    @pytest.mark.parametrize("seed", range(10))
    def test_spectrum_in_unit_interval(self, seed):
        profile = threshold_rank(random_graph(seed), 0.25)
        assert np.all(np.abs(profile.eigenvalues) <= 1 + 1e-9)


class TestThresholdDecomposition:
    """Разложение с весами вершин, равными степеням"""

    def test_truncation_keeps_full_spectrum_of_edge(self):
        g = WeightedGraph.from_edges(2, [(0, 1, 3.0)])
        J_t, t, kept = truncated_adjacency(g, 0.5)
        assert kept == 2
        assert t == pytest.approx(2.0)
        assert np.allclose(J_t, g.J)

    def test_zero_graph_needs_no_pieces(self):
        dec = threshold_cut_decompose(WeightedGraph(n=3, J=np.zeros((3, 3))), 0.5)
        assert dec.width == 0
        assert dec.target_met

    def test_complete_graph_meets_target(self):
        g = complete_graph(8)
        dec = threshold_cut_decompose(g, 0.5)
        assert dec.target_met
        assert dec.residual_value <= 0.5 * g.total_weight + 1e-9
        assert dec.width >= 1
        assert np.allclose(dec.vertex_weights, 7.0)

    def test_bad_eps(self):
        with pytest.raises(ParameterError):
            threshold_cut_decompose(complete_graph(4), 0.0)

    @pytest.mark.parametrize("seed", range(3))
    def test_width_cap_respected(self, seed):
        dec = threshold_cut_decompose(random_graph(seed), 0.3, seed=seed, width_cap=2)
        assert dec.width <= 2


class TestQuantumMaxCut:
    """Оценка максимума H_QMC по произведённым состояниям"""

    def test_hamiltonian_spectrum_single_edge(self):
        H = qmc_hamiltonian(WeightedGraph.from_edges(2, [(0, 1, 1.0)]))
        energy, _ = exact_ground(H.scaled(-1.0))
        assert energy == pytest.approx(-2.0)

    def test_negative_weight_rejected(self):
        with pytest.raises(GraphError):
            qmc_hamiltonian(WeightedGraph.from_edges(2, [(0, 1, -1.0)]))

    def test_grid_delta(self):
        assert grid_delta(0.0, 0.5) == 1.0
        assert grid_delta(1.0, 0.5) == pytest.approx(0.125)
        assert grid_delta(1e-9, 0.5) == 1.0

    @pytest.mark.parametrize("seed", range(3))
    def test_decomposition_energy_within_residual(self, seed):
        g = random_graph(seed, n=6)
        hcd = qmc_decompose(g, 0.5, seed=seed)
        for trial in range(5):
            state = random_product_state(g.n, 2, make_rng(seed, "qmc-state", trial))
            gap = abs(hcd.energy(state) + qmc_product_value(g, state))
            assert gap <= hcd.residual_bound() + 1e-9

    def test_degree_weighted_compression(self):
        g = random_graph(4, n=7)
        hcd = qmc_decompose(g, 0.5, seed=1)
        atlas = build_atlas(hcd)
        state = random_product_state(g.n, 2, make_rng(4, "compress"))
        weights = atlas.atom_weights(g.degrees)
        compressed = atlas.compress(state, g.degrees)
        for var, value in zip(hcd.side_variables(), hcd.side_values(state)):
            atoms = atlas.atoms_in_side(atlas.side_index(var.side))
            assert sum(weights[a] * compressed[a, var.component - 1] for a in atoms) == pytest.approx(value, abs=1e-12)

    def test_empty_graph(self):
        value, witness, report = qmc_estimate(WeightedGraph(n=3, J=np.zeros((3, 3))), 0.5)
        assert value == 0.0
        assert report["budget"]["total"] == 0.0
        assert witness.n == 3

    def test_single_edge(self):
        g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
        value, witness, report = qmc_estimate(g, 0.5, seed=1)
        assert abs(value - 1.0) <= report["budget"]["total"] + 1e-6
        assert report["witness_value"] <= 1.0 + 1e-9
        assert report["witness_value"] == pytest.approx(qmc_product_value(g, witness))
        assert report["threshold_rank"] == pytest.approx(2.0)

    def test_four_cycle_direct(self):
        g = cycle_graph(4)
        value, witness, report = qmc_estimate(g, 0.5, mode="direct")
        assert value == pytest.approx(4.0, abs=1e-6)
        exact_max = -exact_ground(qmc_hamiltonian(g).scaled(-1.0))[0]
        assert exact_max == pytest.approx(6.0)
        assert report["witness_value"] <= exact_max + 1e-9
