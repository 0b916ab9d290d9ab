"""
Численный эксперимент с отображением, разрушающим запутанность.

Для каждой пробы выбирается m ~ U{0..l}, случайное множество C из m кудитов
и базис Паули для каждого измеряемого кудита. Для каждого исхода z
остаток заменяется произведением своих одночастичных маргиналов:
η_{C,b} = Σ_z p_z ψ_z ⊗ (⊗_{u∉C} ρ_u^{(z)}).
Каждый исход даёт произведённое состояние, поэтому энергия η считается
через векторы Блоха.
"""
import itertools
import logging
import math
from typing import Dict, List, Optional

import numpy as np
from scipy.special import entr

from hamiltonian.basis import measurement_bases
from hamiltonian.model import LocalHamiltonian
from hamiltonian.oracles import dense_energy, exact_free_energy, product_free_energy
from hamiltonian.pauli import pauli_decompose, product_energy
from hamiltonian.states import DenseState, ProductState, bloch_from_density, von_neumann_entropy
from utils.errors import DimensionError, ParameterError
from utils.parallel import ordered_map
from utils.seeding import make_rng

logger = logging.getLogger(__name__)

ENTROPY_SLACK = 1e-9
PROBABILITY_FLOOR = 1e-14


def explicit_bound(H: LocalHamiltonian, l: int) -> Optional[float]:
    """
    (2kl/n)|J|_1 + (6k·d^{3k}·log d/√l)·n^{k/2}‖J‖_F; log d = 1 при d = 2.
    При l = 0 оценка не определена.
    """
    if l <= 0:
        return None
    log_d = 1.0 if H.d == 2 else math.log(H.d)
    k, n, d = H.k, H.n, H.d
    return (2 * k * l / n) * H.J1 + (6 * k * d ** (3 * k) * log_d / math.sqrt(l)) * n ** (k / 2) * H.JF


def _single_site_marginals(sub: np.ndarray, r: int, d: int) -> List[np.ndarray]:
    marginals = []
    for s in range(r):
        moved = np.moveaxis(sub, [s, r + s], [0, 1]).reshape(d, d, d ** (r - 1), d ** (r - 1))
        marginals.append(np.einsum("abii->ab", moved))
    return marginals


def _measure(R: np.ndarray, n: int, d: int, measured: List[int], bases: List[int]) -> List[Dict]:
    """
    Все исходы измерения: вероятность, векторы Блоха измеренных кудитов
    и условные маргиналы остальных.
    """
    basis_set = measurement_bases(d)
    for u, b in zip(measured, bases):
        U = basis_set[b]
        R = np.moveaxis(np.tensordot(U.conj(), R, axes=([1], [u])), 0, u)
        R = np.moveaxis(np.tensordot(U, R, axes=([1], [n + u])), 0, n + u)

    rest = [u for u in range(n) if u not in set(measured)]
    r = len(rest)
    outcomes = []
    for z in itertools.product(range(d), repeat=len(measured)):
        index = [slice(None)] * (2 * n)
        for u, zu in zip(measured, z):
            index[u] = zu
            index[n + u] = zu
        sub = R[tuple(index)]
        p = float(np.real(np.trace(sub.reshape(d ** r, d ** r)))) if r else float(np.real(sub))
        if p < PROBABILITY_FLOOR:
            continue
        marginals = _single_site_marginals(sub / p, r, d) if r else []
        measured_blochs = []
        for u, b, zu in zip(measured, bases, z):
            psi = basis_set[b][zu]
            measured_blochs.append(bloch_from_density(np.outer(psi, psi.conj())))
        outcomes.append({
            "p": p,
            "measured": measured_blochs,
            "rest": rest,
            "marginals": marginals,
        })
    return outcomes


def _outcome_state(outcome: Dict, measured: List[int], n: int, d: int, mixed_measured: bool = False) -> ProductState:
    alphas = np.zeros((n, d * d - 1))
    if not mixed_measured:
        for u, a in zip(measured, outcome["measured"]):
            alphas[u] = a
    for u, rho_u in zip(outcome["rest"], outcome["marginals"]):
        alphas[u] = bloch_from_density(rho_u)
    return ProductState(d=d, alphas=alphas)


def eb_experiment(
    H: LocalHamiltonian,
    rho: DenseState,
    l: int,
    trials: int,
    seed: int,
    beta: Optional[float] = None,
) -> Dict:
    """
    Моделирует канал, разрушающий запутанность, на плотном состоянии rho.

    Args:
        H: Гамильтониан
        rho: Входное состояние (например, основное или гиббсовское)
        l: Максимальное число измеряемых кудитов
        trials: Число проб (C, b)
        seed: Базовый seed
        beta: Если задан, дополнительно проверяется произведённое состояние
              свободной энергии (измеренные кудиты заменены на I/d)

    Returns:
        Dict: отчёт с разностями энергий, энтропиями и явной оценкой
    """
    if l < 0:
        raise ParameterError(f"l must be non-negative, got {l}")
    if trials < 1:
        raise ParameterError(f"trials must be positive, got {trials}")
    if rho.n != H.n or rho.d != H.d:
        raise DimensionError("State does not match the Hamiltonian")

    n, d = H.n, H.d
    pd = pauli_decompose(H)
    R = rho.density_matrix().reshape((d,) * (2 * n))
    energy_rho = dense_energy(H, rho)
    entropy_rho = rho.entropy()
    reference_F = exact_free_energy(H, beta) if beta is not None else None
    n_bases = len(measurement_bases(d))
    supports = [set(t.support) for t in H.terms]

    def run_trial(t: int) -> Dict:
        rng = make_rng(seed, "eb", t)
        m = int(rng.integers(0, min(l, n) + 1))
        measured = sorted(int(u) for u in rng.choice(n, size=m, replace=False)) if m else []
        bases = [int(rng.integers(n_bases)) for _ in measured]
        outcomes = _measure(R.copy(), n, d, measured, bases)

        probs = np.array([o["p"] for o in outcomes])
        energies = []
        rest_entropies = []
        for o in outcomes:
            energies.append(product_energy(pd, _outcome_state(o, measured, n, d)))
            rest_entropies.append(sum(von_neumann_entropy(mu) for mu in o["marginals"]))
        energies = np.array(energies)
        rest_entropies = np.array(rest_entropies)
        eta_energy = float(np.dot(probs, energies))
        eta_entropy = float(np.sum(entr(probs)) + np.dot(probs, rest_entropies))

        record = {
            "m": m,
            "measured": measured,
            "bases": bases,
            "outcomes": len(outcomes),
            "eta_energy": eta_energy,
            "energy_difference": energy_rho - eta_energy,
            "eta_entropy": eta_entropy,
            "entropy_gap": eta_entropy - entropy_rho,
        }
        if beta is not None:
            free = energies - rest_entropies / beta
            best = int(np.argmin(free))
            gamma_state = _outcome_state(outcomes[best], measured, n, d, mixed_measured=True)
            record["product_free_energy"] = product_free_energy(H, gamma_state, beta)
            record["measured_interaction"] = float(
                sum(norm for s, norm in zip(supports, H.norms) if s & set(measured))
            )
        return record

    records = ordered_map(run_trial, range(trials))

    eta_energies = np.array([r["eta_energy"] for r in records])
    differences = np.array([r["energy_difference"] for r in records])
    gaps = np.array([r["entropy_gap"] for r in records])
    bound = explicit_bound(H, l)
    report = {
        "n": n,
        "d": d,
        "k": H.k,
        "l": l,
        "trials": trials,
        "seed": seed,
        "rho_energy": energy_rho,
        "rho_entropy": entropy_rho,
        "sigma_energy": float(np.mean(eta_energies)),
        "empirical_difference": float(abs(energy_rho - np.mean(eta_energies))),
        "mean_abs_difference": float(np.mean(np.abs(differences))),
        "max_abs_difference": float(np.max(np.abs(differences))),
        "min_entropy_gap": float(np.min(gaps)),
        "entropy_monotone": bool(np.all(gaps >= -ENTROPY_SLACK)),
        "explicit_bound": bound,
        "within_bound": None if bound is None else bool(np.mean(np.abs(differences)) <= bound),
        "trials_detail": records,
    }
    if beta is not None:
        free_energies = np.array([r["product_free_energy"] for r in records])
        report["beta"] = beta
        report["exact_free_energy"] = reference_F
        report["best_product_free_energy"] = float(np.min(free_energies))
        report["free_energy_variational"] = bool(np.all(free_energies >= reference_F - ENTROPY_SLACK))

    if not report["entropy_monotone"]:
        logger.warning(f"Entropy decreased under the channel: min gap {report['min_entropy_gap']:.3e}")
    logger.info(
        f"EB experiment: l={l}, trials={trials}, mean |ΔE|={report['mean_abs_difference']:.4f}, bound={bound}"
    )
    return report
