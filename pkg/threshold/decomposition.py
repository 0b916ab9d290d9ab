"""
Разрезное разложение с весами степеней для графов малого порогового ранга.

J_D усекается до собственных значений |λ| ≥ eps/2 и возвращается в
исходный масштаб: J_t = D^{1/2} J_D,t D^{1/2}. Затем из J_t извлекаются
куски c·d_S d_Tᵀ, пока измеренная норма ∞→1 остатка J - Σ не станет
≤ eps·|J|_1 или ширина не достигнет c_w·t/eps².
"""
import logging
import math
from typing import Optional

import numpy as np

import config
from regularity.cut_norm import cut_norm, inf_to_one
from regularity.decomposition import CutDecomposition, CutPiece, _check_eps
from threshold.graph import WeightedGraph, normalized_adjacency
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)

QMC_COLOR = (1, 1)


def truncated_adjacency(g: WeightedGraph, eps: float):
    """
    Returns:
        Tuple: (J_t размера n×n, t_{eps/2}, число сохранённых собственных значений)
    """
    JD, active = normalized_adjacency(g)
    full = np.zeros((g.n, g.n))
    if not active:
        return full, 0.0, 0
    vals, vecs = np.linalg.eigh(JD)
    keep = np.abs(vals) >= eps / 2
    truncated = (vecs[:, keep] * vals[keep]) @ vecs[:, keep].T
    root = np.sqrt(g.degrees[active])
    full[np.ix_(active, active)] = root[:, None] * truncated * root[None, :]
    return full, float(np.sum(vals[keep] ** 2)), int(np.sum(keep))


def threshold_cut_decompose(
    g: WeightedGraph,
    eps: float,
    seed: int = 0,
    width_cap: Optional[int] = None,
) -> CutDecomposition:
    """
    Args:
        g: Взвешенный граф
        eps: Точность; цель ‖J - Σ‖_{∞→1} ≤ eps·|J|_1
        seed: Seed эвристик
        width_cap: Явный предел ширины (по умолчанию ceil(c_w·max(t, 1)/eps²))

    Returns:
        CutDecomposition: куски с весами вершин = эффективные степени
    """
    _check_eps(eps)
    n = g.n
    degrees = g.degrees
    J_t, t, kept = truncated_adjacency(g, eps)
    target = eps * g.total_weight
    cap = width_cap if width_cap is not None else int(math.ceil(config.FK_WIDTH_CONSTANT * max(t, 1.0) / eps ** 2))

    R = J_t.copy()
    W = g.J.copy()
    pieces = []
    history = [float(np.linalg.norm(R))]
    while True:
        measured, exact = inf_to_one(W, seed=derive_seed(seed, "threshold-measure", len(pieces)))
        if measured <= target:
            met = True
            break
        if len(pieces) >= cap:
            met = False
            break
        value, (S, T), _ = cut_norm(R, seed=derive_seed(seed, "threshold-cut", len(pieces)))
        d_S, d_T = np.zeros(n), np.zeros(n)
        d_S[S] = degrees[S]
        d_T[T] = degrees[T]
        scale = float(np.dot(d_S, d_S) * np.dot(d_T, d_T))
        if value <= 0 or scale == 0:
            met = False
            break
        coeff = float(d_S @ R @ d_T) / scale
        block = coeff * np.outer(d_S, d_T)
        R -= block
        W -= block
        pieces.append(CutPiece(color=QMC_COLOR, sides=(tuple(S), tuple(T)), coeff=coeff))
        history.append(float(np.linalg.norm(R)))

    if not met:
        logger.warning(f"threshold_cut_decompose: width {len(pieces)} with residual {measured:.4g} > {target:.4g}")
    decomposition = CutDecomposition(
        n=n,
        k=2,
        color=QMC_COLOR,
        pieces=pieces,
        eps=eps,
        norm_fro=float(np.linalg.norm(g.J)),
        target=target,
        width_cap=cap,
        target_met=met,
        residual_kind="inf_to_one",
        residual_value=float(measured),
        residual_exact=bool(exact),
        frobenius_history=history,
        vertex_weights=degrees.copy(),
        max_diagonal=float(np.max(np.abs(np.diag(W)), initial=0.0)),
    )
    decomposition.extra.update({
        "threshold_rank": t,
        "kept_eigenvalues": kept,
        "coefficients": [p.coeff for p in pieces],
    })
    logger.info(f"Threshold decomposition: t={t:.4g}, {len(pieces)} pieces, residual {measured:.4g} (target {target:.4g})")
    return decomposition
