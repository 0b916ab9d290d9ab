"""
Cut-норма и норма ∞→1 для матриц и k-мерных массивов.

‖M‖_C = max_{S_1..S_k} |Σ_{S_1×...×S_k} M|,
‖M‖_{∞→1} = max_{x_j ∈ {±1}^n} Σ M_{i_1..i_k} Π_j x_{j,i_j}.

Точные версии перебирают индикаторы первых k-1 осей, последняя ось
выбирается жадно (знак столбцовой суммы). Эвристики делают попеременную
максимизацию из случайных стартов и возвращают достигнутое значение,
то есть гарантированную нижнюю оценку.
"""
import logging
from typing import List, Tuple

import numpy as np

import config
from utils.errors import ParameterError, SizeLimitError
from utils.seeding import make_rng

logger = logging.getLogger(__name__)

CHUNK = 1 << 14
ASCENT_MAX_ROUNDS = 200

Sides = Tuple[List[int], ...]


def _check_array(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or len(set(M.shape)) != 1:
        raise ParameterError(f"Expected a square array with k >= 2 axes, got shape {M.shape}")
    if M.ndim > 3:
        raise ParameterError(f"Arrays with k={M.ndim} > 3 axes are not supported")
    return M


def exact_bits(M: np.ndarray) -> int:
    """Число перебираемых бит в точных алгоритмах: (k-1)·n."""
    return (M.ndim - 1) * M.shape[0]


def _bits_to_rows(masks: np.ndarray, bits: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(bits, dtype=np.int64)) & 1).astype(float)


def _contract_leading(M: np.ndarray, vectors: List[np.ndarray]) -> np.ndarray:
    """Свёртка первых k-1 осей M с пачками векторов формы (B, n); результат (B, n)."""
    if len(vectors) == 1:
        return vectors[0] @ M
    return np.einsum("bi,bj,ijk->bk", vectors[0], vectors[1], M, optimize=True)


def _split(rows: np.ndarray, k: int, n: int) -> List[np.ndarray]:
    return [rows[:, j * n:(j + 1) * n] for j in range(k - 1)]


def _sides_from_mask(mask: int, k: int, n: int) -> List[List[int]]:
    sides = []
    for j in range(k - 1):
        sides.append([i for i in range(n) if (mask >> (j * n + i)) & 1])
    return sides


def cut_norm_exact(M: np.ndarray) -> Tuple[float, Sides]:
    """
    Точная cut-норма перебором.

    Args:
        M: Квадратный массив с k ∈ {2, 3} осями

    Returns:
        Tuple: (значение, (S_1, ..., S_k)) - стороны отсортированы;
               при равенстве выбирается наименьшая маска

    Raises:
        SizeLimitError: (k-1)·n > CUT_EXACT_MAX_N
    """
    M = _check_array(M)
    k, n = M.ndim, M.shape[0]
    bits = exact_bits(M)
    if bits > config.CUT_EXACT_MAX_N:
        raise SizeLimitError(
            f"Exact cut norm enumerates 2^{bits} side choices; use cut_norm_heuristic",
            "CUT_EXACT_MAX_N",
            config.CUT_EXACT_MAX_N,
        )

    best_value, best_mask, best_sign = 0.0, 0, 1.0
    total = 1 << bits
    for start in range(0, total, CHUNK):
        masks = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
        sums = _contract_leading(M, _split(_bits_to_rows(masks, bits), k, n))
        pos = np.sum(np.clip(sums, 0.0, None), axis=1)
        neg = np.sum(np.clip(-sums, 0.0, None), axis=1)
        values = np.maximum(pos, neg)
        idx = int(np.argmax(values))
        if values[idx] > best_value:
            best_value = float(values[idx])
            best_mask = int(masks[idx])
            best_sign = 1.0 if pos[idx] >= neg[idx] else -1.0

    sides = _sides_from_mask(best_mask, k, n)
    if best_value > 0:
        indicators = [np.zeros((1, n)) for _ in range(k - 1)]
        for vec, side in zip(indicators, sides):
            vec[0, side] = 1.0
        last = best_sign * _contract_leading(M, indicators)[0]
        sides.append([int(i) for i in np.nonzero(last > 0)[0]])
    else:
        sides = [[] for _ in range(k)]
    return best_value, tuple(sides)


def _cut_ascent(M: np.ndarray, start: List[np.ndarray]) -> Tuple[float, List[np.ndarray]]:
    """Попеременная максимизация Σ M Π 1_{S_j} по 0/1 индикаторам."""
    k = M.ndim
    vecs = [v.copy() for v in start]
    value = _multilinear(M, vecs)
    for _ in range(ASCENT_MAX_ROUNDS):
        improved = False
        for j in range(k):
            field = _field(M, vecs, j)
            new = (field > 0).astype(float)
            new_value = float(np.dot(field, new))
            if new_value > value + 1e-12:
                vecs[j] = new
                value = new_value
                improved = True
        if not improved:
            break
    return value, vecs


def _multilinear(M: np.ndarray, vecs: List[np.ndarray]) -> float:
    result = M
    for v in vecs:
        result = np.tensordot(v, result, axes=([0], [0]))
    return float(result)


def _field(M: np.ndarray, vecs: List[np.ndarray], j: int) -> np.ndarray:
    """Свёртка M со всеми векторами, кроме j-го."""
    result = np.moveaxis(M, j, -1)
    for i, v in enumerate(vecs):
        if i == j:
            continue
        result = np.tensordot(v, result, axes=([0], [0]))
    return result


def cut_norm_heuristic(M: np.ndarray, restarts: int = None, seed: int = 0) -> Tuple[float, Sides]:
    """
    Нижняя оценка cut-нормы попеременной максимизацией.

    Первый старт берёт все индексы, остальные - случайные подмножества.
    Для знака минус используется тот же подъём на -M.

    Returns:
        Tuple: (достигнутое значение, стороны)
    """
    M = _check_array(M)
    restarts = config.CUT_HEURISTIC_RESTARTS if restarts is None else restarts
    if restarts < 1:
        raise ParameterError(f"restarts must be positive, got {restarts}")
    k, n = M.ndim, M.shape[0]
    rng = make_rng(seed, "cut-heuristic", n, k)

    best_value = 0.0
    best_sides: Sides = tuple([] for _ in range(k))
    for r in range(restarts):
        if r == 0:
            start = [np.ones(n) for _ in range(k)]
        else:
            start = [(rng.uniform(size=n) < 0.5).astype(float) for _ in range(k)]
        for sign in (1.0, -1.0):
            value, vecs = _cut_ascent(sign * M, start)
            if value > best_value + 1e-12:
                best_value = value
                best_sides = tuple([int(i) for i in np.nonzero(v)[0]] for v in vecs)
    return best_value, best_sides


def cut_norm(M: np.ndarray, seed: int = 0, restarts: int = None) -> Tuple[float, Sides, bool]:
    """
    Точная cut-норма, если перебор допустим, иначе эвристика.

    Returns:
        Tuple: (значение, стороны, признак точности)
    """
    M = _check_array(M)
    if exact_bits(M) <= config.CUT_EXACT_MAX_N:
        value, sides = cut_norm_exact(M)
        return value, sides, True
    value, sides = cut_norm_heuristic(M, restarts=restarts, seed=seed)
    return value, sides, False


def inf_to_one_exact(M: np.ndarray) -> float:
    """
    Точная норма ∞→1; первый знак первой оси фиксирован (симметрия x → -x).

    Raises:
        SizeLimitError: n > TENSOR_EXACT_MAX_N или (k-1)·n > CUT_EXACT_MAX_N
    """
    M = _check_array(M)
    k, n = M.ndim, M.shape[0]
    bits = exact_bits(M)
    if n > config.TENSOR_EXACT_MAX_N:
        raise SizeLimitError(
            f"Exact inf->1 norm is limited to n <= {config.TENSOR_EXACT_MAX_N}, got n={n}; use the heuristic",
            "TENSOR_EXACT_MAX_N",
            config.TENSOR_EXACT_MAX_N,
        )
    if bits > config.CUT_EXACT_MAX_N:
        raise SizeLimitError(
            f"Exact inf->1 norm of a {k}-dim array enumerates 2^{bits - 1} sign patterns; use the heuristic",
            "CUT_EXACT_MAX_N",
            config.CUT_EXACT_MAX_N,
        )
    best = 0.0
    total = 1 << (bits - 1)
    for start in range(0, total, CHUNK):
        masks = np.arange(start, min(start + CHUNK, total), dtype=np.int64) << 1
        signs = 2.0 * _bits_to_rows(masks, bits) - 1.0
        signs[:, 0] = 1.0
        sums = _contract_leading(M, _split(signs, k, n))
        best = max(best, float(np.max(np.sum(np.abs(sums), axis=1))))
    return best


def inf_to_one_heuristic(M: np.ndarray, restarts: int = None, seed: int = 0) -> float:
    """Нижняя оценка нормы ∞→1 попеременной оптимизацией знаков."""
    M = _check_array(M)
    restarts = config.CUT_HEURISTIC_RESTARTS if restarts is None else restarts
    k, n = M.ndim, M.shape[0]
    rng = make_rng(seed, "inf-to-one", n, k)
    best = 0.0
    for r in range(restarts):
        vecs = [np.ones(n) if r == 0 else rng.choice([-1.0, 1.0], size=n) for _ in range(k)]
        value = _multilinear(M, vecs)
        for _ in range(ASCENT_MAX_ROUNDS):
            improved = False
            for j in range(k):
                field = _field(M, vecs, j)
                new = np.where(field >= 0, 1.0, -1.0)
                new_value = float(np.sum(np.abs(field)))
                if new_value > value + 1e-12:
                    vecs[j] = new
                    value = new_value
                    improved = True
            if not improved:
                break
        best = max(best, value)
    return best


def inf_to_one(M: np.ndarray, seed: int = 0) -> Tuple[float, bool]:
    """
    Returns:
        Tuple[float, bool]: (значение, признак точности)
    """
    M = _check_array(M)
    n = M.shape[0]
    if n <= config.TENSOR_EXACT_MAX_N and exact_bits(M) <= config.CUT_EXACT_MAX_N:
        return inf_to_one_exact(M), True
    return inf_to_one_heuristic(M, seed=seed), False
