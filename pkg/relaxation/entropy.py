"""
Максимизация энтропии Σ_a w_a S(ρ_a) на наборе ограничений.

Проективный градиентный подъём с поиском шага Армихо; на выходе -
верхняя оценка зазора Франк-Вульфа, полученная линейной программой по
внешней аппроксимации (полосы, |β_i| ≤ 1, касательные отсечения).
"""
import logging
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.special import entr

import config
from hamiltonian.basis import pauli_basis
from hamiltonian.states import density_from_bloch
from relaxation.constraints import ConstraintSet
from relaxation.feasibility import check_feasible, dykstra_project, state_cut
from utils.errors import InfeasibleError

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
KELLEY_ROUNDS = 40


def bloch_entropy(beta: np.ndarray, d: int, floor: Optional[float] = None) -> float:
    floor = config.ENTROPY_EIGEN_FLOOR if floor is None else floor
    if d == 2:
        r = min(float(np.linalg.norm(beta)), 1.0)
        return float(entr((1 + r) / 2) + entr((1 - r) / 2))
    vals = np.clip(np.linalg.eigvalsh(density_from_bloch(beta, d)), floor, None)
    return float(-np.sum(vals * np.log(vals)))


def bloch_entropy_gradient(beta: np.ndarray, d: int, floor: Optional[float] = None) -> np.ndarray:
    """∂S/∂β_i = -Tr[ln ρ σ_i]/d; собственные значения ограничены снизу floor."""
    floor = config.ENTROPY_EIGEN_FLOOR if floor is None else floor
    beta = np.asarray(beta, dtype=float)
    if d == 2:
        r = float(np.linalg.norm(beta))
        if r < 1e-15:
            return np.zeros_like(beta)
        return -np.arctanh(min(r, 1.0 - floor)) * beta / r
    vals, vecs = np.linalg.eigh(density_from_bloch(beta, d))
    log_rho = (vecs * np.log(np.clip(vals, floor, None))) @ vecs.conj().T
    return -np.real(np.einsum("ij,cji->c", log_rho, pauli_basis(d)[1:])) / d


def _objective(cs: ConstraintSet, x: np.ndarray) -> float:
    return float(sum(w * bloch_entropy(beta, cs.d) for w, beta in zip(cs.weights, cs.blocks(x))))


def _gradient(cs: ConstraintSet, x: np.ndarray) -> np.ndarray:
    return np.concatenate([w * bloch_entropy_gradient(beta, cs.d) for w, beta in zip(cs.weights, cs.blocks(x))])


def frank_wolfe_gap(cs: ConstraintSet, x: np.ndarray, gradient: np.ndarray) -> float:
    """
    Верхняя оценка max_{y∈K} ⟨∇f(x), y - x⟩; по вогнутости f она
    ограничивает сверху OPT - f(x).
    """
    if not np.any(gradient):
        return 0.0
    A_ub = [cs.rows, -cs.rows] if cs.rows.shape[0] else []
    b_ub = [cs.upper, -cs.lower] if cs.rows.shape[0] else []
    cuts, rhs = [], []
    best = None
    for _ in range(KELLEY_ROUNDS):
        rows = A_ub + ([np.array(cuts)] if cuts else [])
        bounds_rhs = b_ub + ([np.array(rhs)] if rhs else [])
        result = linprog(
            -gradient,
            A_ub=np.vstack(rows) if rows else None,
            b_ub=np.concatenate(bounds_rhs) if bounds_rhs else None,
            bounds=[(-1.0, 1.0)] * cs.size,
            method="highs",
        )
        if result.status != 0:
            break
        best = float(-result.fun)
        cut = state_cut(cs, result.x)
        if cut is None or float(cut[0] @ result.x) - cut[1] <= 1e-9:
            break
        cuts.append(cut[0])
        rhs.append(cut[1])
    if best is None:
        return float("inf")
    return max(0.0, best - float(gradient @ x))


def max_entropy(
    cs: ConstraintSet,
    tol: Optional[float] = None,
    max_iter: int = 300,
) -> Tuple[float, np.ndarray, Dict]:
    """
    Args:
        cs: Набор ограничений (веса cs.weights - веса атомов)
        tol: Допуск как доля Σ w_a (по умолчанию ENTROPY_TOL)
        max_iter: Предел итераций подъёма

    Returns:
        Tuple: (энтропия, свидетель (n_vars, d²-1), сведения о сходимости)

    Raises:
        InfeasibleError: набор ограничений несовместен
    """
    tol = config.ENTROPY_TOL if tol is None else tol
    total_weight = float(np.sum(np.abs(cs.weights))) or 1.0

    start = dykstra_project(cs, np.zeros(cs.size))
    if cs.max_violation(start) > 1e-8:
        feasibility = check_feasible(cs)
        if not feasibility.feasible:
            raise InfeasibleError(f"Constraint set is {feasibility.status}; entropy maximization needs a feasible set")
        start = feasibility.witness.reshape(-1)

    x = start
    value = _objective(cs, x)
    step = 1.0
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grad = _gradient(cs, x)
        moved = False
        while step > 1e-12:
            y = dykstra_project(cs, x + step * grad)
            candidate = _objective(cs, y)
            if candidate >= value + ARMIJO * float(grad @ (y - x)) and cs.max_violation(y) <= 1e-8:
                moved = float(np.linalg.norm(y - x)) > 1e-12
                gain = candidate - value
                x, value = y, candidate
                step = min(step * 2.0, 1e6)
                break
            step *= 0.5
        if not moved or gain <= 1e-3 * tol * total_weight:
            break

    grad = _gradient(cs, x)
    gap = frank_wolfe_gap(cs, x, grad)
    certified = gap <= tol * total_weight
    if not certified:
        logger.warning(f"max_entropy: duality gap {gap:.3g} above tolerance {tol * total_weight:.3g}")
    info = {"iterations": iterations, "gap": gap, "certified": certified, "tolerance": tol * total_weight}
    return value, cs.blocks(x).copy(), info
