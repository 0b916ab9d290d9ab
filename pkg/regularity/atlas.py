"""
Общее измельчение (атомы) сторон разрезов и оценка размеров атомов.

Атом вершины определяется сигнатурой принадлежности сторонам:
бит j установлен, если вершина лежит в стороне j.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

import config
from hamiltonian.states import ProductState
from utils.errors import InvariantViolation, ParameterError, SizeLimitError
from utils.seeding import make_rng

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class RefinementAtlas:
    n: int
    sides: List[tuple]
    atom_of: np.ndarray
    signatures: List[int]

    @property
    def atom_count(self) -> int:
        return len(self.signatures)

    def atom_id(self, vertex: int) -> int:
        """Атом вершины по её принадлежности каждой стороне."""
        signature = 0
        for j, members in enumerate(self._side_sets):
            if vertex in members:
                signature |= 1 << j
        return self._by_signature[signature]

    def atoms_in_side(self, j: int) -> List[int]:
        return [a for a, sig in enumerate(self.signatures) if (sig >> j) & 1]

    def side_index(self, side: Sequence[int]) -> int:
        return self._side_index[tuple(side)]

    def members(self, atom: int) -> np.ndarray:
        return np.nonzero(self.atom_of == atom)[0]

    def exact_sizes(self) -> np.ndarray:
        return np.bincount(self.atom_of, minlength=self.atom_count).astype(float)

    def verify(self) -> None:
        """Каждая сторона - объединение атомов; атомы разбивают [n]."""
        counts = self.exact_sizes()
        if int(np.sum(counts)) != self.n or np.any(counts == 0):
            raise InvariantViolation("Atoms do not partition the vertex set")
        for j, side in enumerate(self.sides):
            union = [int(u) for a in self.atoms_in_side(j) for u in self.members(a)]
            if sorted(union) != sorted(side):
                raise InvariantViolation(f"Side {j} is not a union of atoms")

    def compress(self, state: ProductState, weights: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Взвешенные средние векторов Блоха по атомам, форма (A, d²-1).
        Атом с нулевым весом получает нулевой вектор.
        """
        w = np.ones(self.n) if weights is None else np.asarray(weights, dtype=float)
        totals = np.bincount(self.atom_of, weights=w, minlength=self.atom_count)
        sums = np.zeros((self.atom_count, state.alphas.shape[1]))
        np.add.at(sums, self.atom_of, w[:, None] * state.alphas)
        out = np.zeros_like(sums)
        nz = totals > 0
        out[nz] = sums[nz] / totals[nz, None]
        return out

    def atom_weights(self, weights: Optional[np.ndarray] = None) -> np.ndarray:
        w = np.ones(self.n) if weights is None else np.asarray(weights, dtype=float)
        return np.bincount(self.atom_of, weights=w, minlength=self.atom_count)

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "sides": len(self.sides),
            "atoms": self.atom_count,
            "sizes": self.exact_sizes().tolist(),
        }

    def __post_init__(self):
        self._side_sets = [set(s) for s in self.sides]
        self._by_signature = {sig: a for a, sig in enumerate(self.signatures)}
        self._side_index = {tuple(s): j for j, s in enumerate(self.sides)}


def build_atlas_from_sides(n: int, sides: Sequence[Sequence[int]]) -> RefinementAtlas:
    """
    Raises:
        SizeLimitError: число различных сторон больше ATLAS_MAX_SIDES
    """
    distinct: Dict[tuple, None] = {}
    for side in sides:
        distinct.setdefault(tuple(sorted(int(u) for u in side)), None)
    side_list = list(distinct)
    if len(side_list) > config.ATLAS_MAX_SIDES:
        raise SizeLimitError(
            f"Decomposition has {len(side_list)} distinct cut sides; increase eps to shrink the width",
            "ATLAS_MAX_SIDES",
            config.ATLAS_MAX_SIDES,
        )
    signature = np.zeros(n, dtype=np.int64)
    for j, side in enumerate(side_list):
        signature[list(side)] |= 1 << j
    # атомы нумеруются в порядке первой вершины
    _, first, inverse = np.unique(signature, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    atom_of = rank[inverse.reshape(-1)]
    signatures = [int(signature[first[i]]) for i in order]

    atlas = RefinementAtlas(n=n, sides=side_list, atom_of=atom_of, signatures=signatures)
    if n <= config.ATLAS_EXACT_MAX_N:
        atlas.verify()
    logger.debug(f"Atlas: {len(side_list)} sides, {atlas.atom_count} atoms")
    return atlas


def build_atlas(hcd) -> RefinementAtlas:
    """Атлас сторон, для которых угадываются намагниченности."""
    return build_atlas_from_sides(hcd.n, hcd.guessed_sides())


@dataclass(eq=False)
class AtomSizes:
    sizes: np.ndarray
    exact: bool
    error: float
    samples: int
    delta_fail: float

    def to_dict(self) -> Dict:
        return {
            "sizes": self.sizes.tolist(),
            "exact": self.exact,
            "error": self.error,
            "samples": self.samples,
            "delta_fail": self.delta_fail,
        }


def hoeffding_samples(atoms: int, target_err: float, delta_fail: float) -> int:
    """m = ceil(ln(2A/δ) / (2t²)) - объединённая оценка Хёфдинга по всем атомам."""
    return int(math.ceil(math.log(2 * atoms / delta_fail) / (2 * target_err ** 2)))


def estimate_atom_sizes(
    atlas: RefinementAtlas,
    target_err: float,
    delta_fail: float = 0.01,
    seed: int = 0,
    force_sampling: bool = False,
) -> AtomSizes:
    """
    Размеры атомов с аддитивной ошибкой ≤ target_err·n с вероятностью ≥ 1-δ.

    При n ≤ ATLAS_EXACT_MAX_N (и без force_sampling) считается точно.
    """
    if not 0 < target_err < 1:
        raise ParameterError(f"target_err must lie in (0, 1), got {target_err}")
    if not 0 < delta_fail < 1:
        raise ParameterError(f"delta_fail must lie in (0, 1), got {delta_fail}")
    n = atlas.n
    if n <= config.ATLAS_EXACT_MAX_N and not force_sampling:
        return AtomSizes(sizes=atlas.exact_sizes(), exact=True, error=0.0, samples=n, delta_fail=0.0)

    m = hoeffding_samples(atlas.atom_count, target_err, delta_fail)
    rng = make_rng(seed, "atom-sizes", n)
    sample = rng.integers(0, n, size=m)
    counts = np.bincount(atlas.atom_of[sample], minlength=atlas.atom_count)
    sizes = n * counts / m
    logger.warning(f"Atom sizes estimated from {m} samples (error <= {target_err * n:.1f} w.p. {1 - delta_fail})")
    return AtomSizes(sizes=sizes, exact=False, error=target_err * n, samples=m, delta_fail=delta_fail)
