"""
Произведённые (product) и плотные состояния.

ProductState хранит обобщённые векторы Блоха α_u ∈ R^{d²-1}:
ρ_u = I/d + Σ_i α_u,i σ_i / d, так что α_u,i = Tr[ρ_u σ_i].
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import entr

import config
from hamiltonian.basis import pauli_basis
from utils.constants import STATE_TOL
from utils.errors import DimensionError, ParameterError, SizeLimitError

logger = logging.getLogger(__name__)


def density_from_bloch(alpha: np.ndarray, d: int) -> np.ndarray:
    basis = pauli_basis(d)
    alpha = np.asarray(alpha, dtype=float)
    return (basis[0] + np.tensordot(alpha, basis[1:], axes=(0, 0))) / d


def bloch_from_density(rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    basis = pauli_basis(d)
    return np.real(np.einsum("ij,cji->c", rho, basis[1:]))


def von_neumann_entropy(rho: np.ndarray, floor: float = 0.0) -> float:
    """Энтропия фон Неймана с натуральным логарифмом."""
    vals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if floor > 0:
        vals = np.clip(vals, floor, None)
    return entropy_from_spectrum(vals)


def entropy_from_spectrum(vals: np.ndarray) -> float:
    """-Σ λ ln λ по собственным значениям; нулевые пропускаются."""
    vals = np.asarray(vals, dtype=float)
    vals = vals[vals > 1e-15]
    return float(-np.sum(vals * np.log(vals)))


def is_valid_bloch(alpha: np.ndarray, d: int, tol: float = STATE_TOL) -> bool:
    if d == 2:
        return bool(np.linalg.norm(alpha) <= 1.0 + tol)
    return bool(np.min(np.linalg.eigvalsh(density_from_bloch(alpha, d))) >= -tol)


@dataclass(eq=False)
class ProductState:
    d: int
    alphas: np.ndarray

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        if self.alphas.ndim != 2 or self.alphas.shape[1] != self.d * self.d - 1:
            raise DimensionError(
                f"Bloch array shape {self.alphas.shape} does not match d={self.d}"
            )

    @property
    def n(self) -> int:
        return self.alphas.shape[0]

    @classmethod
    def maximally_mixed(cls, n: int, d: int) -> "ProductState":
        return cls(d=d, alphas=np.zeros((n, d * d - 1)))

    @classmethod
    def from_densities(cls, densities) -> "ProductState":
        densities = list(densities)
        d = densities[0].shape[0]
        return cls(d=d, alphas=np.array([bloch_from_density(r) for r in densities]))

    def density(self, u: int) -> np.ndarray:
        return density_from_bloch(self.alphas[u], self.d)

    def augmented(self) -> np.ndarray:
        """Матрица (n, d²) с нулевой компонентой α⁰ = 1."""
        return np.hstack([np.ones((self.n, 1)), self.alphas])

    def validate(self, tol: float = STATE_TOL) -> None:
        for u in range(self.n):
            if not is_valid_bloch(self.alphas[u], self.d, tol):
                raise ParameterError(f"Bloch vector of qudit {u} is not a valid density matrix")

    def entropies(self) -> np.ndarray:
        if self.d == 2:
            r = np.clip(np.linalg.norm(self.alphas, axis=1), 0.0, 1.0)
            return entr((1 + r) / 2) + entr((1 - r) / 2)
        return np.array([von_neumann_entropy(self.density(u)) for u in range(self.n)])

    def entropy(self) -> float:
        return float(np.sum(self.entropies()))

    def dense(self) -> np.ndarray:
        """Плотная матрица ⊗_u ρ_u; только для малых систем."""
        dim = self.d ** self.n
        if dim > config.DENSE_MIXED_MAX_DIM:
            raise SizeLimitError(
                f"Dense product state of dimension {dim} too large",
                "DENSE_MIXED_MAX_DIM",
                config.DENSE_MIXED_MAX_DIM,
            )
        rho = np.ones((1, 1), dtype=complex)
        for u in range(self.n):
            rho = np.kron(rho, self.density(u))
        return rho

    def to_dict(self) -> dict:
        return {"d": self.d, "alphas": self.alphas.tolist()}


def random_product_state(n: int, d: int, rng: np.random.Generator, mixed: bool = True) -> ProductState:
    """
    Случайное произведённое состояние.

    Для кубитов направление равномерно на сфере, радиус r^{1/3} внутри шара
    (mixed) или 1 (чистое). Для d > 2 используется мера Уишарта или Хаара.
    """
    if d == 2:
        v = rng.normal(size=(n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        if mixed:
            v *= rng.uniform(size=(n, 1)) ** (1.0 / 3.0)
        return ProductState(d=2, alphas=v)
    densities = []
    for _ in range(n):
        if mixed:
            g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            rho = g @ g.conj().T
            rho /= np.trace(rho).real
        else:
            psi = rng.normal(size=d) + 1j * rng.normal(size=d)
            psi /= np.linalg.norm(psi)
            rho = np.outer(psi, psi.conj())
        densities.append(rho)
    return ProductState.from_densities(densities)


@dataclass(eq=False)
class DenseState:
    """Вектор d^n (чистое) или матрица плотности d^n × d^n (смешанное)."""

    n: int
    d: int
    vector: Optional[np.ndarray] = None
    matrix: Optional[np.ndarray] = None

    @classmethod
    def pure(cls, vector: np.ndarray, n: int, d: int) -> "DenseState":
        vector = np.asarray(vector, dtype=complex).reshape(-1)
        _check_dim(vector.shape[0], n, d, config.DENSE_PURE_MAX_DIM, "DENSE_PURE_MAX_DIM")
        norm = np.linalg.norm(vector)
        if abs(norm - 1.0) > STATE_TOL:
            raise ParameterError(f"Pure state norm {norm} differs from 1")
        return cls(n=n, d=d, vector=vector)

    @classmethod
    def mixed(cls, matrix: np.ndarray, n: int, d: int) -> "DenseState":
        matrix = np.asarray(matrix, dtype=complex)
        _check_dim(matrix.shape[0], n, d, config.DENSE_MIXED_MAX_DIM, "DENSE_MIXED_MAX_DIM")
        if abs(np.trace(matrix).real - 1.0) > STATE_TOL:
            raise ParameterError("Mixed state trace differs from 1")
        if np.max(np.abs(matrix - matrix.conj().T)) > STATE_TOL:
            raise ParameterError("Mixed state is not Hermitian")
        if np.min(np.linalg.eigvalsh(matrix)) < -STATE_TOL:
            raise ParameterError("Mixed state is not positive semidefinite")
        return cls(n=n, d=d, matrix=matrix)

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    def density_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        _check_dim(self.vector.shape[0], self.n, self.d, config.DENSE_MIXED_MAX_DIM, "DENSE_MIXED_MAX_DIM")
        return np.outer(self.vector, self.vector.conj())

    def entropy(self) -> float:
        if self.is_pure:
            return 0.0
        return von_neumann_entropy(self.matrix)


def _check_dim(dim: int, n: int, d: int, limit: int, name: str) -> None:
    if dim != d ** n:
        raise DimensionError(f"State dimension {dim} does not match d^n = {d ** n}")
    if dim > limit:
        raise SizeLimitError(f"Dense state of dimension {dim} too large", name, limit)
