"""
Quantum Max-Cut на графах малого порогового ранга.

H_QMC = Σ_e w_e (I - XX - YY - ZZ)/2; ищется максимум по произведённым
состояниям, поэтому внутри минимизируется -H_QMC. Три цвета (X,X), (Y,Y),
(Z,Z) разделяют одну структуру разрезов с весами вершин = степени.
"""
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np

import config
from hamiltonian.basis import pauli_string
from hamiltonian.model import LocalHamiltonian
from hamiltonian.states import ProductState
from regularity.decomposition import ColorBlock, HamiltonianCutDecomposition, offdiagonal_residual
from relaxation.estimator import estimate_ground
from threshold.decomposition import threshold_cut_decompose
from threshold.graph import WeightedGraph, threshold_rank
from utils.errors import GraphError
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)

QMC_COLORS = [(1, 1), (2, 2), (3, 3)]


def _check_weights(g: WeightedGraph) -> None:
    if np.any(g.J < 0):
        raise GraphError("Quantum Max-Cut needs non-negative edge weights")


def qmc_hamiltonian(g: WeightedGraph) -> LocalHamiltonian:
    """Гамильтониан QMC на кубитах; член ребра имеет собственные значения 0 и 2w."""
    _check_weights(g)
    singlet = np.eye(4) - pauli_string("XX") - pauli_string("YY") - pauli_string("ZZ")
    terms = [((u, v), 0.5 * w * singlet) for u, v, w in g.edges()]
    return LocalHamiltonian.from_terms(max(g.n, 1), 2, 2, terms)


def qmc_product_value(g: WeightedGraph, state: ProductState) -> float:
    """Σ_e w_e (1 - α_u·α_v)/2."""
    return float(sum(w * (1.0 - np.dot(state.alphas[u], state.alphas[v])) / 2.0 for u, v, w in g.edges()))


def qmc_decompose(g: WeightedGraph, eps: float, seed: int = 0) -> HamiltonianCutDecomposition:
    """
    Разложение -H_QMC = -|J|_1/4 + ¼ Σ_c Σ_{u≠v} J_uv α^u_c α^v_c с одной
    общей структурой разрезов для трёх цветов.
    """
    _check_weights(g)
    dec = threshold_cut_decompose(g, eps, seed=derive_seed(seed, "threshold-decompose"))
    value, exact = offdiagonal_residual(dec, g.J, seed=derive_seed(seed, "qmc-residual"))
    block = ColorBlock(colors=list(QMC_COLORS), weight=0.25, decomposition=dec, offdiag_residual=value, offdiag_exact=exact)
    return HamiltonianCutDecomposition(
        n=g.n,
        d=2,
        k=2,
        eps=eps,
        constant=-g.total_weight / 4.0,
        blocks=[block],
        vertex_weights=g.degrees.copy(),
    )


def grid_delta(t: float, eps: float) -> float:
    """δ = c_δ·eps³/t^{3/2}, не больше 1."""
    if t <= 0:
        return 1.0
    return min(1.0, config.QMC_DELTA_CONSTANT * eps ** 3 / t ** 1.5)


def qmc_estimate(
    g: WeightedGraph,
    eps: float,
    seed: int = 0,
    mode: Optional[str] = None,
) -> Tuple[float, ProductState, Dict]:
    """
    Оценка максимума H_QMC по произведённым состояниям.

    Args:
        g: Граф с неотрицательными весами
        eps: Точность разложения
        seed: Seed
        mode: exhaustive | guided | direct (по умолчанию по размеру сетки)

    Returns:
        Tuple: (значение, свидетель, отчёт); знак энергии уже перевёрнут

    Raises:
        GraphError: отрицательный вес ребра
    """
    _check_weights(g)
    profile = threshold_rank(g, eps / 2)
    t = profile.t(eps / 2)
    if not g.edges():
        logger.info("Empty QMC graph: value 0")
        witness = ProductState.maximally_mixed(max(g.n, 1), 2)
        return 0.0, witness, {"estimate": 0.0, "threshold_rank": t, "edges": 0, "budget": {"total": 0.0}}

    H_min = qmc_hamiltonian(g).scaled(-1.0)
    hcd = qmc_decompose(g, eps, seed)
    delta = grid_delta(t, eps)
    nominal = eps * g.total_weight
    v_hat, witness, report = estimate_ground(hcd, H_min, delta, seed, mode=mode, nominal=nominal)

    value = -v_hat
    witness_value = qmc_product_value(g, witness)
    report.update({
        "estimate": value,
        "estimator_minimum": v_hat,
        "witness_value": witness_value,
        "witness_energy": -report["witness_energy"],
        "rounded_energy": -report["rounded_energy"],
        "eps": eps,
        "delta": delta,
        "threshold_rank": t,
        "edges": len(g.edges()),
        "total_weight": g.total_weight,
        "decomposition": hcd.to_dict(),
        "coefficients": hcd.blocks[0].decomposition.extra["coefficients"],
    })
    logger.info(f"QMC estimate {value:.6f} (t={t:.4g}, delta={delta:.4g}), witness value {witness_value:.6f}")
    return value, witness, report
