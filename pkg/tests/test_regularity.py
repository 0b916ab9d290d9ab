"""
Тесты cut-норм, разрезных разложений и атласа атомов.
"""
import itertools
import sys
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parent.parent
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from controllers.generators import complete_random, from_pauli_strings
from hamiltonian.model import LocalHamiltonian
from hamiltonian.pauli import pauli_decompose, product_energy
from hamiltonian.states import random_product_state
from regularity.atlas import build_atlas, build_atlas_from_sides, estimate_atom_sizes, hoeffding_samples
from regularity.cut_norm import (
    cut_norm_exact,
    cut_norm_heuristic,
    inf_to_one_exact,
    inf_to_one_heuristic,
)
from regularity.decomposition import (
    distinct_mask,
    distinct_product,
    fk_decompose,
    ham_cut_decompose,
    tensor_fk_decompose,
)
from utils.errors import SizeLimitError
from utils.seeding import make_rng


def brute_cut_norm(M: np.ndarray) -> float:
    n = M.shape[0]
    best = 0.0
    for S in itertools.product([0, 1], repeat=n):
        for T in itertools.product([0, 1], repeat=n):
            best = max(best, abs(float(np.array(S) @ M @ np.array(T))))
    return best


def sign_matrix(n: int, seed: int) -> np.ndarray:
    return make_rng(seed, "signs").choice([-1.0, 1.0], size=(n, n))


class TestCutNorm:
    """Точная и эвристическая cut-норма"""

    def test_small_examples(self):
        value, (S, T) = cut_norm_exact(np.ones((2, 2)))
        assert value == 4.0 and S == [0, 1] and T == [0, 1]
        value, (S, T) = cut_norm_exact(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert value == 1.0
        assert abs(float(np.array([[1.0, -1.0], [-1.0, 1.0]])[np.ix_(S, T)].sum())) == 1.0
        assert cut_norm_exact(np.zeros((3, 3)))[0] == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_exact_matches_brute_force(self, seed):
        M = make_rng(seed, "brute").normal(size=(5, 5))
        value, (S, T) = cut_norm_exact(M)
        assert value == pytest.approx(brute_cut_norm(M))
        assert abs(M[np.ix_(S, T)].sum()) == pytest.approx(value)

    def test_exact_size_limit(self):
        with pytest.raises(SizeLimitError):
            cut_norm_exact(np.zeros((21, 21)))

    def test_norm_sandwich(self):
        M = make_rng(3, "sandwich").normal(size=(9, 9))
        cut = cut_norm_exact(M)[0]
        inf1 = inf_to_one_exact(M)
        assert cut <= inf1 + 1e-9
        assert inf1 <= 4 * cut + 1e-9

    def test_heuristic_all_ones(self):
        for restarts in (1, 5):
            assert cut_norm_heuristic(np.ones((7, 7)), restarts=restarts, seed=1)[0] == 49.0
        assert cut_norm_heuristic(np.zeros((4, 4)), seed=1)[0] == 0.0

    def test_heuristic_brackets_exact(self):
        for seed in range(50):
            M = make_rng(seed, "heuristic").normal(size=(12, 12))
            exact = cut_norm_exact(M)[0]
            lower = cut_norm_heuristic(M, restarts=8, seed=seed)[0]
            assert lower <= exact + 1e-9
            assert lower >= 0.5 * exact

    def test_inf_to_one_heuristic_is_lower_bound(self):
        T = make_rng(4, "tensor").normal(size=(5, 5, 5))
        assert inf_to_one_heuristic(T, restarts=6, seed=4) <= inf_to_one_exact(T) + 1e-9

    def test_inf_to_one_exact_limits(self):
        with pytest.raises(SizeLimitError) as info:
            inf_to_one_exact(np.zeros((11, 11, 11)))
        assert info.value.limit_name == "CUT_EXACT_MAX_N"
        with pytest.raises(SizeLimitError) as info:
            inf_to_one_exact(np.zeros((15, 15)))
        assert info.value.limit_name == "TENSOR_EXACT_MAX_N"
        assert inf_to_one_exact(np.ones((10, 10, 10))) == pytest.approx(1000.0)


class TestFriezeKannan:
    """Разложения матриц и тензоров"""

    def test_cut_matrix_is_one_piece(self):
        M = np.zeros((6, 6))
        M[np.ix_([0, 2], [1, 3, 5])] = 1.7
        dec = fk_decompose(M, eps=0.1)
        assert dec.width == 1
        assert np.allclose(dec.residual(M), 0.0)

    def test_zero_matrix(self):
        dec = fk_decompose(np.zeros((5, 5)), eps=0.3)
        assert dec.width == 0 and dec.target_met

    @pytest.mark.parametrize("eps", [0.3, 0.5])
    def test_random_sign_matrices(self, eps):
        for seed in range(20):
            M = sign_matrix(14, seed)
            fro = np.linalg.norm(M)
            dec = fk_decompose(M, eps, seed=seed)
            W = dec.residual(M)
            assert cut_norm_exact(W)[0] <= eps * 14 * fro + 1e-9
            history = dec.frobenius_history
            assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))
            assert history[-1] <= fro + 1e-9
            assert np.allclose(dec.materialize() + W, M, atol=1e-9)

    def test_small_eps_forces_pieces(self):
        M = sign_matrix(10, 7)
        fro = np.linalg.norm(M)
        dec = fk_decompose(M, eps=0.05, width_cap=12)
        W = dec.residual(M)
        assert dec.width >= 1
        assert np.linalg.norm(W) <= fro
        assert dec.coefficient_length <= dec.extra["coefficient_length_bound"] + 1e-9
        assert np.max(np.abs(np.diag(W))) <= dec.coefficient_l1 + 1 + 1e-9
        if not dec.target_met:
            assert dec.width == 12

    def test_heuristic_cut_finder_above_exact_limit(self):
        M = sign_matrix(24, 1)
        dec = fk_decompose(M, eps=0.2, seed=3)
        assert not dec.residual_exact
        assert dec.frobenius_history[-1] <= np.linalg.norm(M) + 1e-9

    def test_tensor_rank_one(self):
        x = np.zeros(5)
        x[[0, 1]] = 1
        y = np.zeros(5)
        y[[2, 3]] = 1
        z = np.zeros(5)
        z[[1, 4]] = 1
        M = -0.8 * np.einsum("i,j,k->ijk", x, y, z)
        dec = tensor_fk_decompose(M, eps=0.1)
        assert dec.width == 1
        assert np.allclose(dec.residual(M), 0.0)
        assert tensor_fk_decompose(np.zeros((4, 4, 4)), eps=0.5).width == 0

    def test_tensor_random_signs(self):
        M = make_rng(8, "tensor-signs").choice([-1.0, 1.0], size=(8, 8, 8))
        dec = tensor_fk_decompose(M, eps=0.75, seed=8)
        W = dec.residual(M)
        bound = 0.75 * np.sqrt(8 ** 3) * np.linalg.norm(M)
        if dec.target_met:
            assert inf_to_one_exact(W) <= bound + 1e-9
        assert np.linalg.norm(W) <= np.linalg.norm(M) + 1e-9


class TestHamiltonianDecomposition:
    """Разложение гамильтониана по цветам"""

    def test_distinct_product_matches_mask(self):
        rng = make_rng(1, "distinct")
        for k in (2, 3):
            vectors = [rng.normal(size=5) for _ in range(k)]
            full = np.ones(())
            for v in vectors:
                full = np.multiply.outer(full, v)
            assert distinct_product(vectors) == pytest.approx(float(np.sum(full[distinct_mask(5, k)])))

    def test_empty_hamiltonian(self):
        hcd = ham_cut_decompose(LocalHamiltonian.from_terms(4, 2, 2, []), eps=0.5)
        assert hcd.blocks == [] and hcd.constant == 0.0

    def test_bipartite_single_color_exact(self):
        entries = [((u, v), "ZZ", 0.5) for u in (0, 1, 2) for v in (3, 4, 5)]
        H = from_pauli_strings(6, 2, entries)
        hcd = ham_cut_decompose(H, eps=0.1)
        pd = pauli_decompose(H)
        rng = make_rng(0, "bipartite")
        for _ in range(20):
            state = random_product_state(6, 2, rng)
            assert hcd.energy(state) == pytest.approx(product_energy(pd, state), abs=1e-9)

    def test_random_complete_instances(self):
        for seed in range(10):
            H = complete_random(10, seed)
            hcd = ham_cut_decompose(H, eps=0.5, seed=seed)
            pd = pauli_decompose(H)
            rng = make_rng(seed, "product-states")
            worst = 0.0
            for _ in range(100):
                state = random_product_state(10, 2, rng)
                worst = max(worst, abs(product_energy(pd, state) - hcd.energy(state)))
            assert worst <= 0.5 * 10 * H.JF
            assert worst <= hcd.residual_bound() + 1e-9

    def test_refined_decomposition_residual_bound(self):
        H = complete_random(6, seed=2)
        hcd = ham_cut_decompose(H, eps=0.05, seed=2)
        pd = pauli_decompose(H)
        rng = make_rng(2, "refined")
        for _ in range(30):
            state = random_product_state(6, 2, rng)
            assert abs(product_energy(pd, state) - hcd.energy(state)) <= hcd.residual_bound() + 1e-9
            values = hcd.side_values(state)
            assert abs(hcd.guess_value(values) - hcd.energy(state)) <= hcd.diagonal_bound() + 1e-9

    def test_three_local(self):
        H = complete_random(5, seed=6, k=3)
        hcd = ham_cut_decompose(H, eps=0.5, seed=6)
        pd = pauli_decompose(H)
        state = random_product_state(5, 2, make_rng(6, "k3"))
        assert abs(product_energy(pd, state) - hcd.energy(state)) <= hcd.residual_bound() + 1e-9


class TestAtlas:
    """Общее измельчение и размеры атомов"""

    def test_single_full_side(self):
        atlas = build_atlas_from_sides(10, [list(range(10))])
        assert atlas.atom_count == 1

    def test_disjoint_sides(self):
        atlas = build_atlas_from_sides(10, [range(4), range(4, 10)])
        assert atlas.atom_count == 2

    def test_random_sides_partition(self):
        rng = make_rng(5, "atlas")
        sides = [sorted(rng.choice(100, size=int(rng.integers(1, 60)), replace=False).tolist()) for _ in range(6)]
        atlas = build_atlas_from_sides(100, sides)
        assert int(atlas.exact_sizes().sum()) == 100
        for v in range(100):
            signature = tuple(v in set(s) for s in sides)
            same = [u for u in range(100) if tuple(u in set(s) for s in sides) == signature]
            assert set(atlas.members(atlas.atom_id(v)).tolist()) == set(same)

    def test_side_cap(self):
        with patch("config.ATLAS_MAX_SIDES", 2):
            with pytest.raises(SizeLimitError):
                build_atlas_from_sides(6, [[0], [1], [2]])

    def test_atlas_of_decomposition(self):
        entries = [((u, v), "ZZ", 0.5) for u in (0, 1, 2) for v in (3, 4, 5)]
        hcd = ham_cut_decompose(from_pauli_strings(6, 2, entries), eps=0.1)
        atlas = build_atlas(hcd)
        assert set(atlas.sides) == set(hcd.guessed_sides()) == {(0, 1, 2), (3, 4, 5)}
        assert atlas.atom_count == 2

    def test_exact_sizes(self):
        atlas = build_atlas_from_sides(10, [range(3)])
        sizes = estimate_atom_sizes(atlas, 0.1, 0.05)
        assert sizes.exact
        assert sizes.sizes.tolist() == [3.0, 7.0]

    def test_single_atom_sampling_is_exact(self):
        atlas = build_atlas_from_sides(50, [range(50)])
        sizes = estimate_atom_sizes(atlas, 0.1, 0.05, seed=2, force_sampling=True)
        assert sizes.sizes.tolist() == [50.0]

    def test_sampling_failure_rate(self):
        n, target, delta = 10000, 0.02, 0.05
        atlas = build_atlas_from_sides(n, [range(n // 2)])
        exact = atlas.exact_sizes()
        failures = 0
        for trial in range(1000):
            sizes = estimate_atom_sizes(atlas, target, delta, seed=trial, force_sampling=True)
            if np.max(np.abs(sizes.sizes - exact)) > target * n:
                failures += 1
        assert failures / 1000 <= delta
        assert sizes.samples == hoeffding_samples(2, target, delta)
