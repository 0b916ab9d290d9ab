"""
Разрезные разложения матриц, тензоров и гамильтонианов.

M = Σ_i d_i·CUT(S_i, T_i) + W. Каждый шаг вычитает среднее остатка по
найденному разрезу, то есть проецирует остаток, поэтому ‖W‖_F не растёт.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from hamiltonian.model import LocalHamiltonian
from hamiltonian.pauli import pauli_decompose
from hamiltonian.states import ProductState
from regularity.cut_norm import cut_norm, inf_to_one
from utils.errors import DimensionError, ParameterError
from utils.parallel import ordered_map
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)

Color = Tuple[int, ...]
Side = Tuple[int, ...]


@dataclass(frozen=True)
class CutPiece:
    color: Color
    sides: Tuple[Side, ...]
    coeff: float

    def to_dict(self) -> Dict:
        return {"color": list(self.color), "sides": [list(s) for s in self.sides], "coeff": self.coeff}


@dataclass(eq=False)
class CutDecomposition:
    """Разложение одного цвета (одного массива M)."""

    n: int
    k: int
    color: Color
    pieces: List[CutPiece]
    eps: float
    norm_fro: float
    target: float
    width_cap: int
    target_met: bool
    residual_kind: str
    residual_value: float
    residual_exact: bool
    frobenius_history: List[float]
    vertex_weights: Optional[np.ndarray] = None
    max_diagonal: float = 0.0
    extra: Dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return len(self.pieces)

    @property
    def coefficient_length(self) -> float:
        return float(sum(p.coeff ** 2 for p in self.pieces))

    @property
    def coefficient_l1(self) -> float:
        return float(sum(abs(p.coeff) for p in self.pieces))

    def _weights(self) -> np.ndarray:
        return np.ones(self.n) if self.vertex_weights is None else self.vertex_weights

    def piece_array(self, piece: CutPiece) -> np.ndarray:
        w = self._weights()
        out = np.ones(())
        for side in piece.sides:
            vec = np.zeros(self.n)
            vec[list(side)] = w[list(side)]
            out = np.multiply.outer(out, vec)
        return piece.coeff * out

    def materialize(self) -> np.ndarray:
        """Σ pieces как плотный массив n^k."""
        total = np.zeros((self.n,) * self.k)
        for piece in self.pieces:
            total += self.piece_array(piece)
        return total

    def residual(self, M: np.ndarray) -> np.ndarray:
        M = np.asarray(M, dtype=float)
        if M.shape != (self.n,) * self.k:
            raise DimensionError(f"Array shape {M.shape} does not match decomposition of n={self.n}, k={self.k}")
        return M - self.materialize()

    def to_dict(self) -> Dict:
        return {
            "color": list(self.color),
            "width": self.width,
            "width_cap": self.width_cap,
            "pieces": [p.to_dict() for p in self.pieces],
            "eps": self.eps,
            "norm_fro": self.norm_fro,
            "target": self.target,
            "target_met": self.target_met,
            "residual": {
                "kind": self.residual_kind,
                "value": self.residual_value,
                "exact": self.residual_exact,
                "frobenius": self.frobenius_history[-1] if self.frobenius_history else 0.0,
                "max_diagonal": self.max_diagonal,
            },
            "coefficient_length": self.coefficient_length,
            **self.extra,
        }


def _check_eps(eps: float) -> None:
    if not (eps > 0 and np.isfinite(eps)):
        raise ParameterError(f"eps must be positive, got {eps}")


def _subtract_mean(W: np.ndarray, sides: Sequence[Sequence[int]]) -> float:
    block = np.ix_(*[list(s) for s in sides])
    coeff = float(np.mean(W[block]))
    W[block] -= coeff
    return coeff


def fk_decompose(
    M: np.ndarray,
    eps: float,
    seed: int = 0,
    color: Color = (),
    width_cap: Optional[int] = None,
) -> CutDecomposition:
    """
    Разложение Фриза-Каннана матрицы n×n.

    Останавливается, когда найденный разрез остатка ≤ eps·n·‖M‖_F, либо
    при ширине ceil(c_w/eps²) (флаг target_met=False).

    Args:
        M: Вещественная матрица n×n
        eps: Точность
        seed: Seed эвристики разреза (используется при n > CUT_EXACT_MAX_N)
        color: Метка цвета для частей
        width_cap: Явный предел ширины

    Returns:
        CutDecomposition: части, история ‖W‖_F, измеренный остаток
    """
    _check_eps(eps)
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParameterError(f"fk_decompose expects a square matrix, got shape {M.shape}")
    n = M.shape[0]
    fro = float(np.linalg.norm(M))
    target = eps * n * fro
    cap = width_cap if width_cap is not None else int(math.ceil(config.FK_WIDTH_CONSTANT / eps ** 2))

    W = M.copy()
    pieces: List[CutPiece] = []
    history = [fro]
    while True:
        value, sides, exact = cut_norm(W, seed=derive_seed(seed, "fk", len(pieces)))
        if value <= target:
            met = True
            break
        if len(pieces) >= cap:
            met = False
            break
        coeff = _subtract_mean(W, sides)
        pieces.append(CutPiece(color=tuple(color), sides=tuple(tuple(s) for s in sides), coeff=coeff))
        history.append(float(np.linalg.norm(W)))

    if not met:
        logger.warning(f"fk_decompose: width cap {cap} reached with residual cut {value:.4g} > target {target:.4g}")
    decomposition = CutDecomposition(
        n=n,
        k=2,
        color=tuple(color),
        pieces=pieces,
        eps=eps,
        norm_fro=fro,
        target=target,
        width_cap=cap,
        target_met=met,
        residual_kind="cut",
        residual_value=float(value),
        residual_exact=bool(exact),
        frobenius_history=history,
        max_diagonal=float(np.max(np.abs(np.diag(W)), initial=0.0)),
    )
    decomposition.extra["coefficient_length_bound"] = fro ** 2 / (eps ** 2 * n ** 2) if n else 0.0
    return decomposition


def tensor_fk_decompose(
    M: np.ndarray,
    eps: float,
    seed: int = 0,
    color: Color = (),
    width_cap: Optional[int] = None,
) -> CutDecomposition:
    """
    Разрезное разложение k-мерного массива (k ∈ {2, 3}).

    Критерий остановки: измеренная норма ∞→1 остатка ≤ eps·N^{1/2}·‖M‖_F,
    N = n^k; предел ширины ceil(c_w/eps^{2k-2}).
    """
    _check_eps(eps)
    M = np.asarray(M, dtype=float)
    k = M.ndim
    if k not in (2, 3) or len(set(M.shape)) != 1:
        raise ParameterError(f"tensor_fk_decompose expects a square array with k in (2, 3), got shape {M.shape}")
    n = M.shape[0]
    fro = float(np.linalg.norm(M))
    target = eps * math.sqrt(n ** k) * fro
    cap = width_cap if width_cap is not None else int(math.ceil(config.FK_WIDTH_CONSTANT / eps ** (2 * k - 2)))

    W = M.copy()
    pieces: List[CutPiece] = []
    history = [fro]
    while True:
        measured, exact = inf_to_one(W, seed=derive_seed(seed, "tensor-measure", len(pieces)))
        if measured <= target:
            met = True
            break
        if len(pieces) >= cap:
            met = False
            break
        value, sides, _ = cut_norm(W, seed=derive_seed(seed, "tensor-fk", len(pieces)))
        if value <= 0:
            met = False
            break
        coeff = _subtract_mean(W, sides)
        pieces.append(CutPiece(color=tuple(color), sides=tuple(tuple(s) for s in sides), coeff=coeff))
        history.append(float(np.linalg.norm(W)))

    if not met:
        logger.warning(f"tensor_fk_decompose: stopped at width {len(pieces)} with residual {measured:.4g} > {target:.4g}")
    diagonal = np.abs(W[(np.arange(n),) * k]) if n else np.zeros(0)
    return CutDecomposition(
        n=n,
        k=k,
        color=tuple(color),
        pieces=pieces,
        eps=eps,
        norm_fro=fro,
        target=target,
        width_cap=cap,
        target_met=met,
        residual_kind="inf_to_one",
        residual_value=float(measured),
        residual_exact=bool(exact),
        frobenius_history=history,
        max_diagonal=float(np.max(diagonal, initial=0.0)),
    )


def distinct_mask(n: int, k: int) -> np.ndarray:
    """Маска кортежей индексов с попарно различными элементами."""
    grids = np.meshgrid(*[np.arange(n)] * k, indexing="ij")
    mask = np.ones((n,) * k, dtype=bool)
    for i in range(k):
        for j in range(i + 1, k):
            mask &= grids[i] != grids[j]
    return mask


def distinct_product(vectors: Sequence[np.ndarray]) -> float:
    """
    Σ по попарно различным (u_1..u_k) от Π_j x_j[u_j] для k ∈ {1, 2, 3}
    по формуле включений-исключений.
    """
    k = len(vectors)
    sums = [float(np.sum(v)) for v in vectors]
    if k == 1:
        return sums[0]
    if k == 2:
        return sums[0] * sums[1] - float(np.dot(vectors[0], vectors[1]))
    if k == 3:
        x1, x2, x3 = vectors
        return (
            sums[0] * sums[1] * sums[2]
            - float(np.dot(x1, x2)) * sums[2]
            - float(np.dot(x1, x3)) * sums[1]
            - float(np.dot(x2, x3)) * sums[0]
            + 2.0 * float(np.sum(x1 * x2 * x3))
        )
    raise ParameterError(f"Locality k={k} is not supported")


@dataclass(frozen=True)
class SideVariable:
    """Намагниченность Σ_{u∈side} w_u α^u_component."""

    side: Side
    component: int


@dataclass(eq=False)
class ColorBlock:
    """Цвета, разделяющие одну структуру разрезов, и их общий вес."""

    colors: List[Color]
    weight: float
    decomposition: CutDecomposition
    offdiag_residual: float = 0.0
    offdiag_exact: bool = True


@dataclass(eq=False)
class HamiltonianCutDecomposition:
    """
    E_D(α) = constant + Σ_b weight_b Σ_{c∈b} Σ_i d_i Σ' Π_j w_{u_j} α^{u_j}_{c_j},
    где Σ' идёт по кортежам u_j ∈ S_ij с попарно различными индексами.
    """

    n: int
    d: int
    k: int
    eps: float
    constant: float
    blocks: List[ColorBlock]
    vertex_weights: np.ndarray

    @property
    def pieces_total(self) -> int:
        return sum(b.decomposition.width for b in self.blocks)

    def widths(self) -> Dict[str, int]:
        return {",".join(map(str, b.colors[0])): b.decomposition.width for b in self.blocks}

    def side_variables(self) -> List[SideVariable]:
        """Различные пары (сторона, компонента) с компонентой ≠ 0, в порядке появления."""
        seen: Dict[SideVariable, None] = {}
        for block in self.blocks:
            for color in block.colors:
                for piece in block.decomposition.pieces:
                    for side, c in zip(piece.sides, color):
                        if c != 0:
                            seen.setdefault(SideVariable(side=tuple(side), component=int(c)), None)
        return list(seen)

    def guessed_sides(self) -> List[Side]:
        seen: Dict[Side, None] = {}
        for var in self.side_variables():
            seen.setdefault(var.side, None)
        return list(seen)

    def side_weight(self, side: Sequence[int]) -> float:
        return float(np.sum(self.vertex_weights[list(side)]))

    def side_values(self, state: ProductState) -> np.ndarray:
        """Истинные намагниченности состояния для всех side_variables()."""
        A = state.augmented()
        return np.array([
            float(np.dot(self.vertex_weights[list(v.side)], A[list(v.side), v.component]))
            for v in self.side_variables()
        ])

    def guess_value(self, values: Sequence[float]) -> float:
        """
        Σ d_i Π_j r_ij для значений side_variables() (диагональ не исключается).
        """
        lookup = dict(zip(self.side_variables(), values))
        total = self.constant
        for block in self.blocks:
            for color in block.colors:
                for piece in block.decomposition.pieces:
                    prod = piece.coeff
                    for side, c in zip(piece.sides, color):
                        if c == 0:
                            prod *= self.side_weight(side)
                        else:
                            prod *= lookup[SideVariable(side=tuple(side), component=int(c))]
                    total += block.weight * prod
        return float(total)

    def energy(self, state: ProductState) -> float:
        """Энергия H_D на произведённом состоянии без диагональных кортежей."""
        if state.n != self.n or state.d != self.d:
            raise DimensionError("State does not match the decomposition")
        A = state.augmented()
        total = self.constant
        for block in self.blocks:
            for color in block.colors:
                for piece in block.decomposition.pieces:
                    vectors = []
                    for side, c in zip(piece.sides, color):
                        vec = np.zeros(self.n)
                        idx = list(side)
                        vec[idx] = self.vertex_weights[idx] * A[idx, c]
                        vectors.append(vec)
                    total += block.weight * piece.coeff * distinct_product(vectors)
        return float(total)

    def diagonal_bound(self) -> float:
        """Верхняя оценка |Σ d_i Π r - E_D| от диагональных кортежей при |α| ≤ 1."""
        total = 0.0
        for block in self.blocks:
            for piece in block.decomposition.pieces:
                vectors = []
                for side in piece.sides:
                    vec = np.zeros(self.n)
                    vec[list(side)] = np.abs(self.vertex_weights[list(side)])
                    vectors.append(vec)
                full = float(np.prod([np.sum(v) for v in vectors]))
                total += abs(block.weight) * len(block.colors) * abs(piece.coeff) * (full - distinct_product(vectors))
        return float(total)

    def residual_bound(self) -> float:
        """Σ_b |weight_b|·#цветов·‖W_b вне диагонали‖_{∞→1} (измеренная)."""
        return float(sum(abs(b.weight) * len(b.colors) * b.offdiag_residual for b in self.blocks))

    @property
    def residual_exact(self) -> bool:
        return all(b.offdiag_exact for b in self.blocks)

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "d": self.d,
            "k": self.k,
            "eps": self.eps,
            "constant": self.constant,
            "blocks": [
                {
                    "colors": [list(c) for c in b.colors],
                    "weight": b.weight,
                    "offdiag_residual": b.offdiag_residual,
                    "offdiag_exact": b.offdiag_exact,
                    **b.decomposition.to_dict(),
                }
                for b in self.blocks
            ],
            "side_variables": len(self.side_variables()),
            "residual_bound": self.residual_bound(),
            "diagonal_bound": self.diagonal_bound(),
        }


def offdiagonal_residual(decomposition: CutDecomposition, M: np.ndarray, seed: int = 0) -> Tuple[float, bool]:
    """Норма ∞→1 остатка с обнулёнными недиагональными (неразличными) кортежами."""
    W = decomposition.residual(M)
    W[~distinct_mask(decomposition.n, decomposition.k)] = 0.0
    return inf_to_one(W, seed=seed)


def ham_cut_decompose(H: LocalHamiltonian, eps: float, seed: int = 0) -> HamiltonianCutDecomposition:
    """
    Разрезное разложение гамильтониана по всем ненулевым цветам.

    Для k=2 используется fk_decompose, для k=3 - tensor_fk_decompose.
    Цвет (0,...,0) даёт константу.

    Raises:
        ParameterError: k ∉ {2, 3}
    """
    _check_eps(eps)
    if H.k not in (2, 3):
        raise ParameterError(f"Cut decomposition supports k in (2, 3), got k={H.k}")
    pd = pauli_decompose(H)
    identity = (0,) * H.k
    constant = float(np.sum(pd.coeffs[(slice(None),) + identity])) if H.m else 0.0
    colors = [c for c in pd.nonzero_colors() if c != identity]

    def run(color: Color) -> ColorBlock:
        M = pd.color_tensor(color)
        color_seed = derive_seed(seed, "color", color)
        if H.k == 2:
            dec = fk_decompose(M, eps, seed=color_seed, color=color)
        else:
            dec = tensor_fk_decompose(M, eps, seed=color_seed, color=color)
        value, exact = offdiagonal_residual(dec, M, seed=color_seed)
        return ColorBlock(colors=[color], weight=1.0, decomposition=dec, offdiag_residual=value, offdiag_exact=exact)

    blocks = ordered_map(run, colors)
    hcd = HamiltonianCutDecomposition(
        n=H.n,
        d=H.d,
        k=H.k,
        eps=eps,
        constant=constant,
        blocks=blocks,
        vertex_weights=np.ones(H.n),
    )
    unmet = sum(1 for b in blocks if not b.decomposition.target_met)
    logger.info(
        f"Hamiltonian cut decomposition: {len(blocks)} colors, {hcd.pieces_total} pieces, "
        f"{len(hcd.side_variables())} side variables, {unmet} colors target-unmet"
    )
    return hcd
