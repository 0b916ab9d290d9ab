"""
Наборы ограничений на намагниченности сторон.

Переменные - векторы Блоха (по одному на атом в сжатой форме или на
вершину в полной), уложенные подряд: x[i·D:(i+1)·D], D = d²-1.
Аффинные строки: lower ≤ Σ_{a⊆S} W_a·β_a[c-1] ≤ upper.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from hamiltonian.states import density_from_bloch
from regularity.atlas import RefinementAtlas
from regularity.decomposition import SideVariable
from utils.errors import DimensionError, InvariantViolation

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ConstraintSet:
    d: int
    n_vars: int
    rows: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    weights: np.ndarray
    labels: List[SideVariable] = field(default_factory=list)
    gamma: float = 1.0
    slack: float = 0.0
    compressed: bool = True
    size_error: float = 0.0

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, self.n_vars * self.dim)
        self.lower = np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if not (self.rows.shape[0] == self.lower.size == self.upper.size):
            raise DimensionError("Constraint rows and bounds disagree in length")
        if self.weights.size != self.n_vars:
            raise DimensionError("One weight per variable is required")
        if np.any(self.lower > self.upper):
            raise InvariantViolation("Constraint bounds are not ordered")

    @property
    def dim(self) -> int:
        return self.d * self.d - 1

    @property
    def size(self) -> int:
        return self.n_vars * self.dim

    def blocks(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(self.n_vars, self.dim)

    def affine_violation(self, x: np.ndarray) -> float:
        if self.rows.shape[0] == 0:
            return 0.0
        values = self.rows @ np.asarray(x, dtype=float).reshape(-1)
        return float(max(np.max(self.lower - values), np.max(values - self.upper), 0.0))

    def psd_violation(self, x: np.ndarray) -> float:
        """Для кубитов ‖β‖ - 1, для d > 2 отрицательное λ_min(ρ)."""
        worst = 0.0
        for beta in self.blocks(x):
            if self.d == 2:
                worst = max(worst, float(np.linalg.norm(beta)) - 1.0)
            else:
                worst = max(worst, -float(np.linalg.eigvalsh(density_from_bloch(beta, self.d))[0]))
        return worst

    def max_violation(self, x: np.ndarray) -> float:
        return max(self.affine_violation(x), self.psd_violation(x))

    def satisfied(self, x: np.ndarray, tol: float) -> bool:
        return self.max_violation(x) <= tol

    def to_dict(self) -> Dict:
        return {
            "variables": self.n_vars,
            "rows": int(self.rows.shape[0]),
            "compressed": self.compressed,
            "slack": self.slack,
            "size_error": self.size_error,
        }


def compressed_constraints(
    atlas: RefinementAtlas,
    atom_weights: np.ndarray,
    variables: Sequence[SideVariable],
    values: Sequence[float],
    slack: float,
    d: int,
    entropy_weights: Optional[np.ndarray] = None,
    gamma: float = 1.0,
    size_error: float = 0.0,
) -> ConstraintSet:
    """
    Ограничения по атомам: строка стороны S ссылается только на атомы,
    целиком лежащие в S.

    Args:
        atlas: Атлас атомов
        atom_weights: W_a (точные или оценённые суммы весов вершин атома)
        variables: Координаты сетки
        values: Значения догадки
        slack: Допуск строки (Δ или 2Δ для оценённых размеров)
        d: Локальная размерность
        entropy_weights: Веса целевой функции энтропии (по умолчанию atom_weights)
    """
    D = d * d - 1
    A = atlas.atom_count
    rows = np.zeros((len(variables), A * D))
    for r, var in enumerate(variables):
        for a in atlas.atoms_in_side(atlas.side_index(var.side)):
            rows[r, a * D + var.component - 1] = atom_weights[a]
    values = np.asarray(values, dtype=float)
    weights = np.asarray(atom_weights if entropy_weights is None else entropy_weights, dtype=float)
    return ConstraintSet(
        d=d,
        n_vars=A,
        rows=rows,
        lower=values - slack,
        upper=values + slack,
        weights=weights,
        labels=list(variables),
        gamma=gamma,
        slack=slack,
        compressed=True,
        size_error=size_error,
    )


def full_constraints(
    n: int,
    d: int,
    vertex_weights: np.ndarray,
    variables: Sequence[SideVariable],
    values: Sequence[float],
    slack: float,
    gamma: float = 1.0,
) -> ConstraintSet:
    """Ограничения с отдельным вектором Блоха на каждую вершину."""
    D = d * d - 1
    rows = np.zeros((len(variables), n * D))
    for r, var in enumerate(variables):
        for u in var.side:
            rows[r, u * D + var.component - 1] = vertex_weights[u]
    values = np.asarray(values, dtype=float)
    return ConstraintSet(
        d=d,
        n_vars=n,
        rows=rows,
        lower=values - slack,
        upper=values + slack,
        weights=np.ones(n),
        labels=list(variables),
        gamma=gamma,
        slack=slack,
        compressed=False,
    )
