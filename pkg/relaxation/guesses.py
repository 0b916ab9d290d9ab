"""
Сетка догадок намагниченностей сторон разрезов.

Координата - пара (сторона S, компонента c ≠ 0); её значения - кратные
шага Δ = γ·W (W - сумма весов вершин, для единичных весов W = n) из
диапазона {-lΔ, ..., lΔ}, l = ⌊1/γ⌋.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List

import numpy as np

import config
from regularity.decomposition import HamiltonianCutDecomposition, SideVariable
from utils.errors import EnumerationLimitError, ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GuessVector:
    index: int
    values: tuple

    def to_dict(self) -> Dict:
        return {"index": self.index, "values": list(self.values)}


@dataclass(eq=False)
class GuessGrid:
    variables: List[SideVariable]
    gamma: float
    pitch: float
    slack: float
    levels: int
    max_magnitude: np.ndarray
    bloch_radius: float
    points: List[np.ndarray]
    noisy: bool = False

    @classmethod
    def build(
        cls,
        hcd: HamiltonianCutDecomposition,
        gamma: float,
        noisy: bool = False,
        pruning: bool = True,
    ) -> "GuessGrid":
        """
        Args:
            hcd: Разложение гамильтониана
            gamma: Шаг сетки в долях W, 0 < γ ≤ 1
            noisy: Размеры атомов оценены; шаг и допуск удваиваются
            pruning: Отбрасывать значения |g| > max|m| + Δ
        """
        check_gamma(gamma)
        total = float(np.sum(np.abs(hcd.vertex_weights)))
        levels = int(math.floor(1.0 / gamma))
        pitch = (2.0 if noisy else 1.0) * gamma * total
        variables = hcd.side_variables()
        max_mag = np.array([float(np.sum(np.abs(hcd.vertex_weights[list(v.side)]))) for v in variables])
        base = np.arange(-levels, levels + 1) * pitch
        points = []
        for bound in max_mag:
            keep = np.abs(base) <= bound + pitch + 1e-12 if pruning else np.ones_like(base, dtype=bool)
            points.append(base[keep])
        return cls(
            variables=variables,
            gamma=gamma,
            pitch=pitch,
            slack=pitch,
            levels=levels,
            max_magnitude=max_mag,
            bloch_radius=math.sqrt(hcd.d - 1),
            points=points,
            noisy=noisy,
        )

    def size(self) -> int:
        """Размер сетки до совместного отсечения."""
        return int(np.prod([len(p) for p in self.points], dtype=float)) if self.points else 1

    def _side_groups(self) -> List[List[int]]:
        groups: Dict[tuple, List[int]] = {}
        for i, var in enumerate(self.variables):
            groups.setdefault(var.side, []).append(i)
        return [g for g in groups.values() if len(g) > 1]

    def admissible(self, values: np.ndarray) -> bool:
        """
        Необходимое условие совместности по стороне: ‖(|g| - Δ)_+‖ ≤ W_S·r_max,
        так как ‖Σ_{u∈S} w_u α_u‖ ≤ W_S·r_max.
        """
        values = np.asarray(values, dtype=float)
        for group in self._side_groups():
            excess = np.clip(np.abs(values[group]) - self.slack, 0.0, None)
            if np.linalg.norm(excess) > self.max_magnitude[group[0]] * self.bloch_radius + 1e-9:
                return False
        return True

    def contains(self, values: np.ndarray) -> bool:
        for value, pts in zip(values, self.points):
            if np.min(np.abs(pts - value)) > 1e-9 * max(1.0, self.pitch):
                return False
        return self.admissible(values)

    def round(self, magnetizations: np.ndarray) -> np.ndarray:
        """Ближайшая точка сетки: clip(round(m/Δ), -l, l)·Δ."""
        steps = np.clip(np.round(np.asarray(magnetizations, dtype=float) / self.pitch), -self.levels, self.levels)
        return steps * self.pitch

    def neighbors(self, values: np.ndarray) -> Iterator[np.ndarray]:
        """Сдвиги на ±Δ по одной координате, остающиеся в сетке."""
        for i in range(len(values)):
            for step in (-1.0, 1.0):
                moved = np.array(values, dtype=float)
                moved[i] += step * self.pitch
                if self.contains(moved):
                    yield moved

    def to_dict(self) -> Dict:
        return {
            "variables": len(self.variables),
            "gamma": self.gamma,
            "pitch": self.pitch,
            "levels": self.levels,
            "noisy": self.noisy,
            "size": self.size(),
        }


def check_gamma(gamma: float) -> None:
    if not 0 < gamma <= 1:
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma}")


def iterate_grid(grid: GuessGrid) -> Iterator[GuessVector]:
    """
    Поток догадок в лексикографическом порядке сетки.

    Raises:
        EnumerationLimitError: размер сетки больше ENUMERATION_CAP
    """
    size = grid.size()
    if size > config.ENUMERATION_CAP:
        raise EnumerationLimitError(
            f"Guess grid has {size} points; increase gamma or use direct mode",
            "ENUMERATION_CAP",
            config.ENUMERATION_CAP,
        )
    return _walk(grid)


def _walk(grid: GuessGrid) -> Iterator[GuessVector]:
    index = 0
    for combo in itertools.product(*grid.points):
        values = np.array(combo, dtype=float)
        if grid.admissible(values):
            yield GuessVector(index=index, values=tuple(float(v) for v in combo))
            index += 1


def enumerate_guesses(
    hcd: HamiltonianCutDecomposition,
    gamma: float,
    pruning: bool = True,
    noisy: bool = False,
) -> Iterator[GuessVector]:
    """Строит сетку по разложению и перечисляет её точки."""
    grid = GuessGrid.build(hcd, gamma, noisy=noisy, pruning=pruning)
    logger.debug(f"Guess grid: {len(grid.variables)} coordinates, {grid.size()} points before joint pruning")
    return iterate_grid(grid)
