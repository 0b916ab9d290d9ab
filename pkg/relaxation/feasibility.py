"""
Проверка совместности набора ограничений.

Порядок: подсказка (если дана) → проекция нуля методом Dykstra →
LP-релаксация с ограничениями |β_i| ≤ 1 → метод эллипсоидов с глубокими
отсечениями. Эллипсоид доказывает несовместность, когда отсечение
целиком отрезает текущий эллипсоид; если объём стал меньше шара
радиуса r_in, результат "undecided".
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

import config
from hamiltonian.basis import pauli_basis
from hamiltonian.states import bloch_from_density, density_from_bloch
from relaxation.constraints import ConstraintSet
from utils.constants import WITNESS_TOL
from utils.errors import InvariantViolation

logger = logging.getLogger(__name__)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNDECIDED = "undecided"

DYKSTRA_MAX_ITER = 2000


@dataclass(eq=False)
class FeasibilityResult:
    status: str
    witness: Optional[np.ndarray]
    iterations: int
    method: str
    violation: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    def to_dict(self) -> Dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "method": self.method,
            "violation": self.violation,
        }


def unit_simplex_projection(c: np.ndarray) -> np.ndarray:
    """Евклидова проекция на {x ≥ 0, Σx = 1}."""
    a = -np.sort(-c)
    lambdas = (np.cumsum(a) - 1) / np.arange(1, len(c) + 1)
    for k in range(len(c) - 1, -1, -1):
        if a[k] > lambdas[k]:
            return np.maximum(c - lambdas[k], 0)
    return np.full_like(c, 1.0 / len(c))


def project_bloch(beta: np.ndarray, d: int) -> np.ndarray:
    """
    Проекция вектора Блоха на множество состояний.

    Для кубитов - шар радиуса 1. Для d > 2 собственные значения ρ
    проецируются на симплекс; норма Фробениуса ρ пропорциональна
    евклидовой норме β, поэтому это и есть проекция по β.
    """
    beta = np.asarray(beta, dtype=float)
    if d == 2:
        norm = float(np.linalg.norm(beta))
        return beta / norm if norm > 1.0 else beta.copy()
    rho = density_from_bloch(beta, d)
    vals, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if vals[0] >= 0:
        return beta.copy()
    vals = unit_simplex_projection(vals)
    return bloch_from_density((vecs * vals) @ vecs.conj().T)


def project_states(cs: ConstraintSet, x: np.ndarray) -> np.ndarray:
    return np.concatenate([project_bloch(beta, cs.d) for beta in cs.blocks(x)]) if cs.n_vars else x.copy()


def _project_slab(x: np.ndarray, row: np.ndarray, lower: float, upper: float) -> np.ndarray:
    norm2 = float(row @ row)
    if norm2 == 0.0:
        return x
    value = float(row @ x)
    if value < lower:
        return x + (lower - value) / norm2 * row
    if value > upper:
        return x + (upper - value) / norm2 * row
    return x


def dykstra_project(cs: ConstraintSet, point: np.ndarray, max_iter: int = DYKSTRA_MAX_ITER, tol: float = 1e-13) -> np.ndarray:
    """
    Проекция точки на пересечение полос и множеств состояний
    (алгоритм Dykstra с поправками по каждому множеству).
    """
    x = np.asarray(point, dtype=float).reshape(-1).copy()
    count = cs.rows.shape[0]
    increments = np.zeros((count + 1, x.size))
    for _ in range(max_iter):
        previous = x.copy()
        for r in range(count):
            y = x + increments[r]
            x = _project_slab(y, cs.rows[r], cs.lower[r], cs.upper[r])
            increments[r] = y - x
        y = x + increments[count]
        x = project_states(cs, y)
        increments[count] = y - x
        if np.linalg.norm(x - previous) <= tol:
            break
    return x


def _lp_relaxation_infeasible(cs: ConstraintSet) -> bool:
    """|Tr[ρσ_i]| ≤ 1 для любого состояния; пустота LP доказывает несовместность."""
    if cs.rows.shape[0] == 0:
        return False
    A_ub = np.vstack([cs.rows, -cs.rows])
    b_ub = np.concatenate([cs.upper, -cs.lower])
    result = linprog(np.zeros(cs.size), A_ub=A_ub, b_ub=b_ub, bounds=[(-1.0, 1.0)] * cs.size, method="highs")
    return result.status == 2


def state_cut(cs: ConstraintSet, x: np.ndarray) -> Optional[Tuple[np.ndarray, float]]:
    """Самое нарушенное ограничение состояния в виде gᵀx ≤ b."""
    best = None
    worst = 0.0
    D = cs.dim
    for i, beta in enumerate(cs.blocks(x)):
        if cs.d == 2:
            norm = float(np.linalg.norm(beta))
            if norm - 1.0 > worst:
                g = np.zeros(cs.size)
                g[i * D:(i + 1) * D] = beta / norm
                best, worst = (g, 1.0), norm - 1.0
        else:
            vals, vecs = np.linalg.eigh(density_from_bloch(beta, cs.d))
            if -vals[0] > worst:
                v = vecs[:, 0]
                s = np.real(np.einsum("i,cij,j->c", v.conj(), pauli_basis(cs.d)[1:], v))
                g = np.zeros(cs.size)
                g[i * D:(i + 1) * D] = -s
                best, worst = (g, 1.0), -float(vals[0])
    return best


def _deepest_cut(cs: ConstraintSet, c: np.ndarray, P: np.ndarray) -> Optional[Tuple[np.ndarray, float, float]]:
    candidates = []
    if cs.rows.shape[0]:
        values = cs.rows @ c
        for r in np.nonzero(values > cs.upper)[0]:
            candidates.append((cs.rows[r], float(cs.upper[r])))
        for r in np.nonzero(values < cs.lower)[0]:
            candidates.append((-cs.rows[r], -float(cs.lower[r])))
    state = state_cut(cs, c)
    if state is not None:
        candidates.append(state)
    best = None
    for g, b in candidates:
        scale = float(g @ P @ g)
        if scale <= 0.0:
            return g, b, math.inf
        depth = (float(g @ c) - b) / math.sqrt(scale)
        if best is None or depth > best[2]:
            best = (g, b, depth)
    return best


def _ellipsoid(cs: ConstraintSet, radius: float, inner_radius: float, max_iter: int) -> Tuple[str, Optional[np.ndarray], int]:
    N = cs.size
    c = np.zeros(N)
    P = np.eye(N) * radius ** 2
    log_floor = N * math.log(inner_radius)
    for it in range(1, max_iter + 1):
        cut = _deepest_cut(cs, c, P)
        if cut is None:
            return FEASIBLE, c, it
        g, b, alpha = cut
        if alpha >= 1.0:
            return INFEASIBLE, None, it
        Pg = P @ g
        step = Pg / math.sqrt(float(g @ Pg))
        if N == 1:
            half = math.sqrt(P[0, 0])
            lo, hi = c[0] - half, c[0] + half
            if g[0] > 0:
                hi = min(hi, b / g[0])
            else:
                lo = max(lo, b / g[0])
            c = np.array([(lo + hi) / 2])
            P = np.array([[((hi - lo) / 2) ** 2]])
        else:
            c = c - (1 + N * alpha) / (N + 1) * step
            P = (N * N * (1 - alpha * alpha) / (N * N - 1.0)) * (
                P - 2 * (1 + N * alpha) / ((N + 1) * (1 + alpha)) * np.outer(step, step)
            )
            P = 0.5 * (P + P.T)
        sign, logdet = np.linalg.slogdet(P)
        if sign <= 0 or 0.5 * logdet < log_floor:
            return UNDECIDED, None, it
    return UNDECIDED, None, max_iter


def check_feasible(
    cs: ConstraintSet,
    tol: float = WITNESS_TOL,
    inner_radius: Optional[float] = None,
    hint: Optional[np.ndarray] = None,
    max_iter: Optional[int] = None,
) -> FeasibilityResult:
    """
    Args:
        cs: Набор ограничений
        tol: Допуск проверки свидетеля
        inner_radius: r_in (по умолчанию INNER_RADIUS_CONSTANT·γ)
        hint: Точка-кандидат (например, сжатое известное состояние)
        max_iter: Предел итераций эллипсоида

    Returns:
        FeasibilityResult: статус и свидетель формы (n_vars, d²-1)
    """
    if hint is not None:
        x = np.asarray(hint, dtype=float).reshape(-1)
        if cs.max_violation(x) <= tol * 1e-2:
            return _verified(cs, FEASIBLE, x, 0, "hint", tol)

    x = dykstra_project(cs, np.zeros(cs.size))
    if cs.max_violation(x) <= tol * 1e-1:
        return _verified(cs, FEASIBLE, x, 1, "projection", tol)

    if _lp_relaxation_infeasible(cs):
        return FeasibilityResult(status=INFEASIBLE, witness=None, iterations=1, method="lp-relaxation")

    radius = cs.d * math.sqrt(max(cs.n_vars, 1))
    r_in = inner_radius if inner_radius is not None else config.INNER_RADIUS_CONSTANT * cs.gamma
    status, point, iterations = _ellipsoid(cs, radius, r_in, max_iter or config.FEASIBILITY_MAX_ITER)
    if status == UNDECIDED:
        logger.warning(f"Feasibility undecided after {iterations} ellipsoid steps (inner radius {r_in:.3g})")
        return FeasibilityResult(status=UNDECIDED, witness=None, iterations=iterations, method="ellipsoid")
    if status == INFEASIBLE:
        return FeasibilityResult(status=INFEASIBLE, witness=None, iterations=iterations, method="ellipsoid")
    return _verified(cs, FEASIBLE, point, iterations, "ellipsoid", tol)


def _verified(cs: ConstraintSet, status: str, x: np.ndarray, iterations: int, method: str, tol: float) -> FeasibilityResult:
    violation = cs.max_violation(x)
    if violation > tol:
        raise InvariantViolation(f"Feasibility witness violates constraints by {violation:.3g}")
    return FeasibilityResult(
        status=status,
        witness=cs.blocks(x).copy(),
        iterations=iterations,
        method=method,
        violation=violation,
    )
