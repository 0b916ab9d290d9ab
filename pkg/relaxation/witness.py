"""
Развёртывание сжатых свидетелей и округление к чистым состояниям.
"""
import logging

import numpy as np
from scipy.special import logsumexp

from hamiltonian.basis import pauli_basis
from hamiltonian.model import LocalHamiltonian
from hamiltonian.pauli import pauli_decompose, product_energy_gradient
from hamiltonian.states import ProductState, bloch_from_density
from regularity.atlas import RefinementAtlas
from utils.errors import DimensionError

logger = logging.getLogger(__name__)

PURITY_TOL = 1e-9


def expand_witness(atlas: RefinementAtlas, compressed: np.ndarray, d: int) -> ProductState:
    """Каждая вершина получает вектор Блоха своего атома."""
    compressed = np.asarray(compressed, dtype=float)
    if compressed.shape != (atlas.atom_count, d * d - 1):
        raise DimensionError(
            f"Compressed witness shape {compressed.shape} does not match {atlas.atom_count} atoms with d={d}"
        )
    return ProductState(d=d, alphas=compressed[atlas.atom_of].copy())


def local_field(g: np.ndarray, d: int) -> np.ndarray:
    """Оператор F = Σ_i g_i σ_i; энергия по кудиту равна Tr[F ρ]."""
    return np.tensordot(np.asarray(g, dtype=float), pauli_basis(d)[1:], axes=(0, 0))


def best_pure_response(g: np.ndarray, d: int) -> np.ndarray:
    """Чистое состояние, минимизирующее ⟨g, α⟩ (собственный вектор поля)."""
    g = np.asarray(g, dtype=float)
    if d == 2:
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            return np.array([0.0, 0.0, 1.0])
        return -g / norm
    vals, vecs = np.linalg.eigh(local_field(g, d))
    v = vecs[:, 0]
    return bloch_from_density(np.outer(v, v.conj()))


def local_gibbs_response(g: np.ndarray, d: int, beta: float) -> np.ndarray:
    """ρ = e^{-βF}/Z минимизирует Tr[Fρ] - S(ρ)/β."""
    vals, vecs = np.linalg.eigh(local_field(g, d))
    weights = np.exp(-beta * vals - logsumexp(-beta * vals))
    return bloch_from_density((vecs * weights) @ vecs.conj().T)


def is_pure(alpha: np.ndarray, d: int) -> bool:
    # Tr ρ² = (1 + ‖α‖²)/d
    return float(np.dot(alpha, alpha)) >= d - 1 - PURITY_TOL


def round_to_pure(state: ProductState, H: LocalHamiltonian) -> ProductState:
    """
    Метод условных матожиданий: энергия линейна по каждому α_u, поэтому
    замена ρ_u на чистое состояние минимума локального поля её не
    увеличивает. Уже чистые кудиты не меняются.
    """
    if state.n != H.n or state.d != H.d:
        raise DimensionError("State does not match the Hamiltonian")
    pd = pauli_decompose(H)
    current = ProductState(d=state.d, alphas=state.alphas.copy())
    replaced = 0
    for u in range(current.n):
        if is_pure(current.alphas[u], current.d):
            continue
        grad = product_energy_gradient(pd, current)[u]
        current.alphas[u] = best_pure_response(grad, current.d)
        replaced += 1
    logger.debug(f"round_to_pure: {replaced} of {current.n} qudits replaced")
    return current
