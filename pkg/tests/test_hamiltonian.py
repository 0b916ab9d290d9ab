"""
Тесты ядра: модель гамильтониана, разложение Паули, точные оракулы
и эксперимент с отображением, разрушающим запутанность.
"""
import math
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parent.parent
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from controllers.generators import complete_heisenberg, complete_random, from_pauli_strings
from hamiltonian.basis import color_index, pauli_string
from hamiltonian.entanglement import eb_experiment, explicit_bound
from hamiltonian.model import LocalHamiltonian
from hamiltonian.oracles import (
    assemble_dense,
    dense_energy,
    exact_free_energy,
    exact_ground,
    product_free_energy,
)
from hamiltonian.pauli import pauli_decompose, product_energy, product_energy_gradient
from hamiltonian.states import DenseState, ProductState, entropy_from_spectrum, random_product_state, von_neumann_entropy
from utils.errors import (
    DimensionError,
    HamiltonianError,
    ParameterError,
    SizeLimitError,
    UnsupportedDimensionError,
)
from utils.seeding import make_rng


def heisenberg_pair() -> LocalHamiltonian:
    return from_pauli_strings(2, 2, [((0, 1), "XX", 1.0), ((0, 1), "YY", 1.0), ((0, 1), "ZZ", 1.0)])


def single_z() -> LocalHamiltonian:
    return from_pauli_strings(1, 1, [((0,), "Z", 1.0)])


class TestLocalHamiltonian:
    """Инварианты построения гамильтониана"""

    def test_duplicates_merge_and_zero_terms_drop(self):
        H = from_pauli_strings(3, 2, [((0, 1), "ZZ", 0.5), ((0, 1), "ZZ", 0.5), ((1, 2), "XX", 1.0), ((1, 2), "XX", -1.0)])
        assert H.m == 1
        assert H.terms[0].support == (0, 1)
        assert np.allclose(H.terms[0].matrix, pauli_string("ZZ"))

    def test_norms_are_cached(self):
        H = from_pauli_strings(3, 2, [((0, 1), "ZZ", 0.5), ((1, 2), "XX", 1.0)])
        assert H.J1 == pytest.approx(1.5)
        assert H.JF == pytest.approx(math.sqrt(1.25))

    def test_non_hermitian_rejected(self):
        bad = np.zeros((4, 4), dtype=complex)
        bad[0, 1] = 1.0
        with pytest.raises(HamiltonianError):
            LocalHamiltonian.from_terms(2, 2, 2, [((0, 1), bad)])

    def test_bad_support_rejected(self):
        with pytest.raises(HamiltonianError):
            LocalHamiltonian.from_terms(2, 2, 2, [((1, 0), pauli_string("ZZ"))])
        with pytest.raises(HamiltonianError):
            LocalHamiltonian.from_terms(2, 2, 2, [((0, 2), pauli_string("ZZ"))])

    def test_unsupported_dimension(self):
        with pytest.raises(UnsupportedDimensionError):
            LocalHamiltonian.from_terms(2, 3, 2, [])


class TestPauliDecomposition:
    """Разложение по базису Паули и полином энергии"""

    def test_xx_single_color(self):
        pd = pauli_decompose(from_pauli_strings(2, 2, [((0, 1), "XX", 1.0)]))
        x = color_index(2, "X")
        assert pd.color_matrix(x, x)[0, 1] == pytest.approx(1.0)
        assert pd.nonzero_colors() == [(x, x)]

    def test_empty_hamiltonian(self):
        pd = pauli_decompose(LocalHamiltonian.from_terms(4, 2, 2, []))
        assert pd.nonzero_colors() == []
        assert product_energy(pd, ProductState.maximally_mixed(4, 2)) == 0.0

    @pytest.mark.parametrize("seed", range(100))
    def test_round_trip(self, seed):
        n = 2 + seed % 7
        H = complete_random(n, seed)
        pd = pauli_decompose(H)
        for i, term in enumerate(H.terms):
            assert np.linalg.norm(pd.reconstruct_term(i) - term.matrix) <= 1e-9

    def test_round_trip_ququart(self):
        H = complete_random(3, seed=4, d=4)
        pd = pauli_decompose(H)
        for i, term in enumerate(H.terms):
            assert np.linalg.norm(pd.reconstruct_term(i) - term.matrix) <= 1e-9

    def test_zz_energies(self):
        pd = pauli_decompose(from_pauli_strings(2, 2, [((0, 1), "ZZ", 1.0)]))
        up = ProductState(d=2, alphas=[[0, 0, 1], [0, 0, 1]])
        anti = ProductState(d=2, alphas=[[0, 0, 1], [0, 0, -1]])
        assert product_energy(pd, up) == pytest.approx(1.0)
        assert product_energy(pd, anti) == pytest.approx(-1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_dense_trace(self, seed):
        H = complete_random(5, seed)
        state = random_product_state(5, 2, make_rng(seed, "state"))
        dense = np.real(np.trace(assemble_dense(H) @ state.dense()))
        assert product_energy(pauli_decompose(H), state) == pytest.approx(dense, abs=1e-9)

    def test_three_local_matches_dense(self):
        H = complete_random(4, seed=2, k=3)
        state = random_product_state(4, 2, make_rng(2, "state"))
        dense = np.real(np.trace(assemble_dense(H) @ state.dense()))
        assert product_energy(pauli_decompose(H), state) == pytest.approx(dense, abs=1e-9)

    def test_gradient_is_linear_coefficient(self):
        H = complete_random(4, seed=9)
        pd = pauli_decompose(H)
        state = random_product_state(4, 2, make_rng(9, "state"))
        grad = product_energy_gradient(pd, state)
        moved = ProductState(d=2, alphas=state.alphas.copy())
        moved.alphas[2] = 0.0
        delta = product_energy(pd, state) - product_energy(pd, moved)
        assert delta == pytest.approx(float(np.dot(grad[2], state.alphas[2])), abs=1e-9)

    def test_dimension_mismatch(self):
        pd = pauli_decompose(complete_random(3, seed=1))
        with pytest.raises(DimensionError):
            product_energy(pd, ProductState.maximally_mixed(4, 2))


class TestOracles:
    """Точная диагонализация и свободная энергия"""

    def test_heisenberg_singlet(self):
        energy, state = exact_ground(heisenberg_pair())
        assert energy == pytest.approx(-3.0, abs=1e-9)
        assert dense_energy(heisenberg_pair(), state) == pytest.approx(-3.0, abs=1e-9)

    def test_empty_and_single_z(self):
        assert exact_ground(LocalHamiltonian.from_terms(3, 2, 2, []))[0] == 0.0
        assert exact_ground(single_z())[0] == pytest.approx(-1.0)

    def test_free_energy_closed_forms(self):
        assert exact_free_energy(single_z(), 1.0) == pytest.approx(-math.log(2 * math.cosh(1.0)), abs=1e-9)
        assert exact_free_energy(single_z(), 100.0) == pytest.approx(-1.0, abs=1e-6)
        empty = LocalHamiltonian.from_terms(3, 2, 2, [])
        assert exact_free_energy(empty, 2.0) == pytest.approx(-3 * math.log(2) / 2.0)

    def test_beta_must_be_positive(self):
        with pytest.raises(ParameterError):
            exact_free_energy(single_z(), 0.0)

    def test_entropy_of_spectrum_and_matrix(self):
        assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(math.log(2))
        assert entropy_from_spectrum(np.array([0.5, 0.5, 0.0])) == pytest.approx(math.log(2))
        rho = np.diag([0.7, 0.2, 0.1, 0.0])
        assert von_neumann_entropy(rho) == pytest.approx(entropy_from_spectrum(np.diag(rho)))
        assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0

    def test_size_limit_named(self):
        with pytest.raises(SizeLimitError) as info:
            assemble_dense(LocalHamiltonian.from_terms(13, 2, 2, []))
        assert info.value.limit_name == "DENSE_MIXED_MAX_DIM"

    def test_product_free_energy_examples(self):
        empty = LocalHamiltonian.from_terms(3, 2, 2, [])
        assert product_free_energy(empty, ProductState.maximally_mixed(3, 2), 1.0) == pytest.approx(-3 * math.log(2))
        beta = 1.3
        gibbs = ProductState(d=2, alphas=[[0.0, 0.0, -math.tanh(beta)]])
        assert product_free_energy(single_z(), gibbs, beta) == pytest.approx(exact_free_energy(single_z(), beta), abs=1e-9)
        H = complete_random(3, seed=5)
        pure = random_product_state(3, 2, make_rng(5, "pure"), mixed=False)
        assert product_free_energy(H, pure, 2.0) == pytest.approx(product_energy(pauli_decompose(H), pure), abs=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_variational_bounds(self, seed):
        H = complete_random(4, seed)
        state = random_product_state(4, 2, make_rng(seed, "variational"))
        ground, _ = exact_ground(H)
        assert ground <= product_energy(pauli_decompose(H), state) + 1e-9
        for beta in (0.5, 2.0, 10.0):
            assert product_free_energy(H, state, beta) >= exact_free_energy(H, beta) - 1e-9


class TestEntanglementBreaking:
    """Численный эксперимент с измерением случайного подмножества"""

    def test_zero_hamiltonian(self):
        H = LocalHamiltonian.from_terms(4, 2, 2, [])
        _, rho = exact_ground(complete_heisenberg(4))
        report = eb_experiment(H, rho, l=2, trials=10, seed=1)
        assert all(abs(t["energy_difference"]) < 1e-12 for t in report["trials_detail"])

    def test_product_input_without_measurement(self):
        H = complete_random(4, seed=3)
        state = random_product_state(4, 2, make_rng(3, "product"))
        rho = DenseState.mixed(state.dense(), 4, 2)
        report = eb_experiment(H, rho, l=0, trials=3, seed=3)
        assert report["max_abs_difference"] < 1e-9
        assert report["explicit_bound"] is None

    def test_complete_heisenberg_ground_state(self):
        H = complete_heisenberg(6)
        _, rho = exact_ground(H)
        for l in (1, 2, 4):
            report = eb_experiment(H, rho, l=l, trials=40, seed=11)
            assert report["entropy_monotone"]
            assert report["min_entropy_gap"] >= -1e-9
            assert report["mean_abs_difference"] <= explicit_bound(H, l)
            assert report["within_bound"] is True

    def test_deterministic_given_seed(self):
        H = complete_heisenberg(4)
        _, rho = exact_ground(H)
        a = eb_experiment(H, rho, l=2, trials=8, seed=5)
        b = eb_experiment(H, rho, l=2, trials=8, seed=5)
        assert a["trials_detail"] == b["trials_detail"]

    def test_free_energy_variant_is_variational(self):
        from hamiltonian.oracles import gibbs_state

        H = complete_heisenberg(4)
        beta = 2.0
        rho = gibbs_state(H, beta)
        report = eb_experiment(H, rho, l=2, trials=10, seed=2, beta=beta)
        assert report["free_energy_variational"]
        assert report["best_product_free_energy"] >= report["exact_free_energy"] - 1e-9
