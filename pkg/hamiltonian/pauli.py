"""
Разложение членов гамильтониана по обобщённому базису Паули и
полином энергии произведённых состояний.

Для члена h_e на носителе (u_1..u_k) коэффициенты
h^c_e = d^{-k} Tr[h_e σ^{c_1} ⊗ ... ⊗ σ^{c_k}], так что
Tr[H ⊗_u ρ_u] = Σ_e Σ_c h^c_e Π_j α^{c_j}_{u_j} с α⁰ ≡ 1.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from hamiltonian.basis import pauli_basis
from hamiltonian.model import LocalHamiltonian
from hamiltonian.states import ProductState
from utils.errors import DimensionError, ParameterError

logger = logging.getLogger(__name__)

COEFF_TOL = 1e-13


@dataclass(eq=False)
class PauliDecomposition:
    n: int
    d: int
    k: int
    supports: np.ndarray  # (T, k)
    coeffs: np.ndarray  # (T, d², ..., d²), k осей цветов

    @property
    def colors(self) -> int:
        return self.d * self.d

    def reconstruct_term(self, index: int) -> np.ndarray:
        """Восстановление матрицы члена Σ_c h^c σ^c."""
        basis = pauli_basis(self.d)
        op = np.zeros((self.d ** self.k, self.d ** self.k), dtype=complex)
        for color in zip(*np.nonzero(np.abs(self.coeffs[index]) > 0)):
            piece = np.ones((1, 1), dtype=complex)
            for c in color:
                piece = np.kron(piece, basis[c])
            op += self.coeffs[index][color] * piece
        return op

    def nonzero_colors(self) -> List[Tuple[int, ...]]:
        if self.coeffs.shape[0] == 0:
            return []
        mask = np.any(np.abs(self.coeffs) > COEFF_TOL, axis=0)
        return [tuple(int(c) for c in color) for color in zip(*np.nonzero(mask))]

    def color_matrix(self, a: int, b: int) -> np.ndarray:
        """
        Матрица J^{ab} (только для k=2) в симметричном хранении:
        J^{ab}_{uv} = h^{ab}_{(u,v)}, J^{ba}_{vu} = h^{ab}_{(u,v)},
        поэтому J^{ab} = (J^{ba})^T.
        """
        if self.k != 2:
            raise ParameterError("Color matrices are defined for 2-local decompositions")
        J = np.zeros((self.n, self.n))
        if self.supports.shape[0]:
            u, v = self.supports[:, 0], self.supports[:, 1]
            J[u, v] += self.coeffs[:, a, b]
            J[v, u] += self.coeffs[:, b, a]
        return J

    def color_matrices(self) -> Dict[Tuple[int, int], np.ndarray]:
        """Все ненулевые J^{ab}, включая цвета с единичной компонентой."""
        result = {}
        for a, b in self.nonzero_colors_symmetric():
            result[(a, b)] = self.color_matrix(a, b)
            result[(b, a)] = result[(a, b)].T.copy()
        return result

    def nonzero_colors_symmetric(self) -> List[Tuple[int, int]]:
        """Пары a ≤ b, для которых J^{ab} или J^{ba} ненулевые."""
        pairs = set()
        for a, b in self.nonzero_colors():
            pairs.add((min(a, b), max(a, b)))
        return sorted(pairs)

    def color_tensor(self, color: Tuple[int, ...]) -> np.ndarray:
        """k-мерный массив M^c_{u_1..u_k} (ненулевой только на носителях)."""
        M = np.zeros((self.n,) * self.k)
        if self.supports.shape[0]:
            M[tuple(self.supports.T)] = self.coeffs[(slice(None),) + tuple(color)]
        return M


def pauli_decompose(H: LocalHamiltonian) -> PauliDecomposition:
    """
    Разлагает все члены H по базису Паули.

    Результат кэшируется на объекте H.
    """
    cached = H._cache.get("pauli")
    if cached is not None:
        return cached

    d, k = H.d, H.k
    basis = pauli_basis(d)
    # операторы σ^c на k кудитах, форма (d²,)*k + (d^k, d^k)
    full = basis
    for _ in range(k - 1):
        full = np.einsum("aij,...kl->a...ikjl", basis, full).reshape(
            (d * d,) + full.shape[:-2] + (full.shape[-2] * d, full.shape[-1] * d)
        )
    coeffs = np.zeros((H.m,) + (d * d,) * k)
    for idx, term in enumerate(H.terms):
        values = np.einsum("...ij,ji->...", full, term.matrix) / d ** k
        coeffs[idx] = np.real(values)
    coeffs[np.abs(coeffs) < COEFF_TOL] = 0.0

    pd = PauliDecomposition(n=H.n, d=d, k=k, supports=H.supports(), coeffs=coeffs)
    H._cache["pauli"] = pd
    logger.debug(f"Pauli decomposition: {H.m} terms, {len(pd.nonzero_colors())} nonzero colors")
    return pd


def _check_dims(pd: PauliDecomposition, state: ProductState) -> None:
    if pd.n != state.n or pd.d != state.d:
        raise DimensionError(
            f"Decomposition (n={pd.n}, d={pd.d}) does not match state (n={state.n}, d={state.d})"
        )


def product_energy(pd: PauliDecomposition, state: ProductState) -> float:
    """
    Tr[H ⊗_u ρ_u] через полином по векторам Блоха.

    Raises:
        DimensionError: если n или d не совпадают
    """
    _check_dims(pd, state)
    if pd.supports.shape[0] == 0:
        return 0.0
    A = state.augmented()
    values = pd.coeffs
    for j in range(pd.k):
        values = np.einsum("ti...,ti->t...", values, A[pd.supports[:, j]])
    return float(np.sum(values))


def product_energy_gradient(pd: PauliDecomposition, state: ProductState) -> np.ndarray:
    """
    Градиент энергии по α (массив n × (d²-1)); энергия мультилинейна,
    поэтому градиент по α_u не зависит от α_u.
    """
    _check_dims(pd, state)
    grad = np.zeros((pd.n, pd.d * pd.d))
    if pd.supports.shape[0] == 0:
        return grad[:, 1:]
    A = state.augmented()
    for j in range(pd.k):
        values = pd.coeffs
        # сворачиваем все позиции кроме j; ось позиции j уходит в конец
        for i in range(pd.k):
            if i == j:
                values = np.moveaxis(values, 1, -1)
                continue
            values = np.einsum("ti...,ti->t...", values, A[pd.supports[:, i]])
        np.add.at(grad, pd.supports[:, j], values)
    return grad[:, 1:]

