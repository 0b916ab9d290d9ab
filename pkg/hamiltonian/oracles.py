"""
Точные плотные оракулы: основное состояние, спектр, свободная энергия
и вариационная свободная энергия произведённых состояний.

Действие H на вектор реализовано свёрткой каждого члена с тензором
состояния формы (d,)*n, без сборки полной матрицы.
"""
import logging
from typing import Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh
from scipy.special import logsumexp

import config
from hamiltonian.model import LocalHamiltonian
from hamiltonian.pauli import pauli_decompose, product_energy
from hamiltonian.states import DenseState, ProductState
from utils.errors import ParameterError, SizeLimitError
from utils.seeding import make_rng

logger = logging.getLogger(__name__)

GROUND_RESIDUAL_TOL = 1e-8


def _check_limit(H: LocalHamiltonian, limit: int, name: str) -> None:
    if H.dim > limit:
        raise SizeLimitError(
            f"System with d^n = {H.d}^{H.n} = {H.dim} exceeds the dense limit", name, limit
        )


def apply_hamiltonian(H: LocalHamiltonian, psi: np.ndarray) -> np.ndarray:
    """
    H·psi для вектора (dim,) или набора столбцов (dim, B).
    """
    batched = psi.ndim == 2
    shape = (H.d,) * H.n + ((psi.shape[1],) if batched else ())
    tensor = psi.reshape(shape)
    out = np.zeros(shape, dtype=complex)
    for term in H.terms:
        k = term.k
        op = term.matrix.reshape((H.d,) * (2 * k))
        moved = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(term.support)))
        out += np.moveaxis(moved, list(range(k)), list(term.support))
    return out.reshape(psi.shape)


def assemble_dense(H: LocalHamiltonian) -> np.ndarray:
    """Полная матрица d^n × d^n (только в пределах DENSE_MIXED_MAX_DIM)."""
    _check_limit(H, config.DENSE_MIXED_MAX_DIM, "DENSE_MIXED_MAX_DIM")
    identity = np.eye(H.dim, dtype=complex)
    matrix = apply_hamiltonian(H, identity)
    return 0.5 * (matrix + matrix.conj().T)


def as_linear_operator(H: LocalHamiltonian) -> LinearOperator:
    return LinearOperator(
        (H.dim, H.dim), matvec=lambda v: apply_hamiltonian(H, np.asarray(v).reshape(-1)), dtype=complex
    )


def exact_ground(H: LocalHamiltonian) -> Tuple[float, DenseState]:
    """
    Минимальное собственное значение H и соответствующий единичный вектор.

    Returns:
        Tuple[float, DenseState]: (энергия, основное состояние)

    Raises:
        SizeLimitError: d^n выше DENSE_PURE_MAX_DIM
    """
    _check_limit(H, config.DENSE_PURE_MAX_DIM, "DENSE_PURE_MAX_DIM")
    if H.m == 0:
        vector = np.zeros(H.dim, dtype=complex)
        vector[0] = 1.0
        return 0.0, DenseState.pure(vector, H.n, H.d)

    if H.dim <= config.DENSE_EIGH_MAX_DIM:
        vals, vecs = np.linalg.eigh(assemble_dense(H))
        energy, vector = float(vals[0]), vecs[:, 0]
    else:
        logger.info(f"Using Lanczos for ground state of dimension {H.dim}")
        v0 = make_rng(0, "lanczos", H.dim).normal(size=H.dim).astype(complex)
        vals, vecs = eigsh(as_linear_operator(H), k=1, which="SA", v0=v0, tol=1e-12)
        energy, vector = float(vals[0]), vecs[:, 0]

    vector = vector / np.linalg.norm(vector)
    residual = float(np.linalg.norm(apply_hamiltonian(H, vector) - energy * vector))
    if residual > GROUND_RESIDUAL_TOL:
        logger.warning(f"Ground-state residual {residual:.3e} above {GROUND_RESIDUAL_TOL}")
    return energy, DenseState.pure(vector, H.n, H.d)


def exact_spectrum(H: LocalHamiltonian) -> np.ndarray:
    _check_limit(H, config.DENSE_MIXED_MAX_DIM, "DENSE_MIXED_MAX_DIM")
    if H.m == 0:
        return np.zeros(H.dim)
    return np.linalg.eigvalsh(assemble_dense(H))


def check_beta(beta: float) -> None:
    if not (beta > 0 and np.isfinite(beta)):
        raise ParameterError(f"Inverse temperature must be positive and finite, got beta={beta}")


def exact_free_energy(H: LocalHamiltonian, beta: float) -> float:
    """
    F = -(1/β) ln Tr e^{-βH}, натуральный логарифм.
    """
    check_beta(beta)
    vals = exact_spectrum(H)
    return float(-logsumexp(-beta * vals) / beta)


def gibbs_state(H: LocalHamiltonian, beta: float) -> DenseState:
    check_beta(beta)
    _check_limit(H, config.DENSE_MIXED_MAX_DIM, "DENSE_MIXED_MAX_DIM")
    if H.m == 0:
        return DenseState.mixed(np.eye(H.dim, dtype=complex) / H.dim, H.n, H.d)
    vals, vecs = np.linalg.eigh(assemble_dense(H))
    weights = np.exp(-beta * vals - logsumexp(-beta * vals))
    rho = (vecs * weights) @ vecs.conj().T
    return DenseState.mixed(0.5 * (rho + rho.conj().T), H.n, H.d)


def dense_energy(H: LocalHamiltonian, state: DenseState) -> float:
    """Tr[Hρ] для чистого или смешанного плотного состояния."""
    if state.is_pure:
        return float(np.real(np.vdot(state.vector, apply_hamiltonian(H, state.vector))))
    return float(np.real(np.trace(apply_hamiltonian(H, state.matrix))))


def product_free_energy(H: LocalHamiltonian, state: ProductState, beta: float) -> float:
    """
    Вариационная свободная энергия Tr[Hσ] - Σ_u S(ρ_u)/β произведённого
    состояния; всегда не меньше точной свободной энергии.
    """
    check_beta(beta)
    return product_energy(pauli_decompose(H), state) - state.entropy() / beta
