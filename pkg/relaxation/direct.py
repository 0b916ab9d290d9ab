"""
Прямые минимизаторы по произведённым состояниям (базовая линия).

gs_direct: проективный градиентный спуск по векторам Блоха с поиском
шага и точными покоординатными проходами; fe_direct: проходы среднего
поля ρ_u = e^{-βF_u}/Z для свободной энергии. Оба монотонны в пределах
одного запуска.
"""
import logging
from typing import Dict, List, Tuple

import numpy as np

from hamiltonian.model import LocalHamiltonian
from hamiltonian.oracles import check_beta, product_free_energy
from hamiltonian.pauli import pauli_decompose, product_energy, product_energy_gradient
from hamiltonian.states import ProductState, random_product_state
from relaxation.feasibility import project_bloch
from relaxation.witness import best_pure_response, local_gibbs_response
from utils.errors import ParameterError
from utils.parallel import ordered_map
from utils.seeding import make_rng

logger = logging.getLogger(__name__)

IMPROVEMENT_TOL = 1e-12


def _check_runs(restarts: int, iters: int) -> None:
    if restarts < 1 or iters < 1:
        raise ParameterError(f"restarts and iters must be positive, got {restarts}, {iters}")


def _gradient_step(pd, state: ProductState, energy: float, step: float) -> Tuple[ProductState, float, float]:
    grad = product_energy_gradient(pd, state)
    while step > 1e-10:
        alphas = np.array([project_bloch(a, state.d) for a in state.alphas - step * grad])
        trial = ProductState(d=state.d, alphas=alphas)
        value = product_energy(pd, trial)
        if value < energy:
            return trial, value, min(step * 2.0, 1e3)
        step *= 0.5
    return state, energy, 1.0


def _sweep(pd, state: ProductState) -> ProductState:
    for u in range(state.n):
        grad = product_energy_gradient(pd, state)[u]
        state.alphas[u] = best_pure_response(grad, state.d)
    return state


def gs_direct_runs(H: LocalHamiltonian, restarts: int = 8, iters: int = 200, seed: int = 0) -> List[Dict]:
    """
    Все запуски минимизатора энергии.

    Returns:
        List[Dict]: для каждого запуска value, state и history (энергия
        после каждой итерации)
    """
    _check_runs(restarts, iters)
    pd = pauli_decompose(H)

    def run(index: int) -> Dict:
        state = random_product_state(H.n, H.d, make_rng(seed, "gs-direct", index), mixed=False)
        energy = product_energy(pd, state)
        history = [energy]
        step = 1.0
        for _ in range(iters):
            state, value, step = _gradient_step(pd, state, energy, step)
            state = _sweep(pd, state)
            value = product_energy(pd, state)
            history.append(value)
            done = energy - value <= IMPROVEMENT_TOL
            energy = value
            if done:
                break
        return {"value": energy, "state": state, "history": history}

    return ordered_map(run, range(restarts))


def gs_direct(H: LocalHamiltonian, restarts: int = 8, iters: int = 200, seed: int = 0) -> Tuple[float, ProductState]:
    """
    Лучшее найденное значение min Tr[H ⊗ρ_u] по произведённым состояниям.

    Args:
        H: Гамильтониан
        restarts: Число случайных стартов
        iters: Предел итераций на старт
        seed: Seed

    Returns:
        Tuple: (значение, состояние); ничьи разрешаются по номеру старта
    """
    runs = gs_direct_runs(H, restarts, iters, seed)
    best = min(range(len(runs)), key=lambda i: (runs[i]["value"], i))
    logger.debug(f"gs_direct: best of {restarts} runs = {runs[best]['value']:.6f}")
    return float(runs[best]["value"]), runs[best]["state"]


def fe_direct_runs(H: LocalHamiltonian, beta: float, restarts: int = 8, iters: int = 200, seed: int = 0) -> List[Dict]:
    check_beta(beta)
    _check_runs(restarts, iters)
    pd = pauli_decompose(H)

    def run(index: int) -> Dict:
        if index == 0:
            state = ProductState.maximally_mixed(H.n, H.d)
        else:
            state = random_product_state(H.n, H.d, make_rng(seed, "fe-direct", index))
        value = product_free_energy(H, state, beta)
        history = [value]
        for _ in range(iters):
            for u in range(state.n):
                grad = product_energy_gradient(pd, state)[u]
                state.alphas[u] = local_gibbs_response(grad, state.d, beta)
            current = product_free_energy(H, state, beta)
            history.append(current)
            done = value - current <= IMPROVEMENT_TOL
            value = current
            if done:
                break
        return {"value": value, "state": state, "history": history}

    return ordered_map(run, range(restarts))


def fe_direct(
    H: LocalHamiltonian,
    beta: float,
    restarts: int = 8,
    iters: int = 200,
    seed: int = 0,
) -> Tuple[float, ProductState]:
    """Лучшая найденная вариационная свободная энергия произведённого состояния."""
    runs = fe_direct_runs(H, beta, restarts, iters, seed)
    best = min(range(len(runs)), key=lambda i: (runs[i]["value"], i))
    return float(runs[best]["value"]), runs[best]["state"]
