"""
Подвыборка кудитов и эксперимент со сложностью по числу вершин.

H_Q содержит только члены с носителем внутри Q; масштабированная оценка
(n/q)^k·value(H_Q) сравнивается со значением на полном гамильтониане.
"""
import logging
from typing import Callable, Dict, List, Optional

import numpy as np

from hamiltonian.model import LocalHamiltonian
from hamiltonian.oracles import exact_ground
from hamiltonian.pauli import pauli_decompose
from regularity.cut_norm import cut_norm, inf_to_one
from regularity.decomposition import ham_cut_decompose
from relaxation.direct import gs_direct
from relaxation.estimator import gs_estimate
from utils.constants import SOLVERS
from utils.errors import ParameterError
from utils.parallel import ordered_map
from utils.seeding import derive_seed, make_rng

logger = logging.getLogger(__name__)


def subsample(H: LocalHamiltonian, q: int, seed: int = 0) -> LocalHamiltonian:
    """
    Равномерное q-подмножество кудитов без возвращения.

    Raises:
        ParameterError: q вне [1, n]
    """
    if not 1 <= q <= H.n:
        raise ParameterError(f"Sample size q must lie in [1, {H.n}], got {q}")
    H_Q, _ = H.restrict(sample_vertices(H.n, q, seed))
    return H_Q


def sample_vertices(n: int, q: int, seed: int) -> List[int]:
    rng = make_rng(seed, "subsample", q)
    return sorted(int(v) for v in rng.choice(n, size=q, replace=False))


def _solver(name: str, eps: float, gamma: float, seed: int) -> Callable[[LocalHamiltonian], float]:
    if name not in SOLVERS:
        raise ParameterError(f"Unknown solver {name!r}; expected one of {SOLVERS}")

    def solve(H: LocalHamiltonian) -> float:
        if H.m == 0:
            return 0.0
        if name == "exact":
            return exact_ground(H)[0]
        if name == "direct":
            return gs_direct(H, seed=seed)[0]
        return gs_estimate(H, eps, gamma, seed=seed)[0]

    return solve


def vsc_experiment(
    H: LocalHamiltonian,
    q: int,
    trials: int,
    solver: str = "direct",
    seed: int = 0,
    eps: float = 0.5,
    gamma: float = 0.25,
    reference: Optional[float] = None,
) -> Dict:
    """
    Args:
        H: Гамильтониан
        q: Размер выборки
        trials: Число выборок
        solver: exact | relaxation | direct (одинаковый на обоих масштабах)
        seed: Seed; выборка t использует derive_seed(seed, "trial", t)
        eps, gamma: Параметры решателя relaxation
        reference: Готовое значение на полном H (иначе считается тем же решателем)

    Returns:
        Dict: {q, trials, estimates, reference, mean, sd, max_dev, ...}
    """
    if not 1 <= q <= H.n:
        raise ParameterError(f"Sample size q must lie in [1, {H.n}], got {q}")
    if trials < 1:
        raise ParameterError(f"trials must be positive, got {trials}")
    solve = _solver(solver, eps, gamma, seed)
    scale = (H.n / q) ** H.k
    if reference is None:
        reference = solve(H)

    residual_arrays = None
    if solver == "relaxation" and H.m:
        hcd = ham_cut_decompose(H, eps, seed=derive_seed(seed, "decompose"))
        pd = pauli_decompose(H)
        residual_arrays = [b.decomposition.residual(pd.color_tensor(b.colors[0])) for b in hcd.blocks]

    def run_trial(t: int) -> Dict:
        chosen = sample_vertices(H.n, q, derive_seed(seed, "trial", t))
        H_Q, _ = H.restrict(chosen)
        value = solve(H_Q)
        record = {"vertices": chosen, "terms": H_Q.m, "value": value, "scaled": scale * value}
        if residual_arrays is not None:
            index = np.ix_(*[chosen] * H.k)
            norms = []
            for W in residual_arrays:
                sub = W[index]
                if H.k == 2:
                    norms.append(cut_norm(sub, seed=derive_seed(seed, "residual", t))[0])
                else:
                    norms.append(inf_to_one(sub, seed=derive_seed(seed, "residual", t))[0])
            record["sampled_residuals"] = [scale * v for v in norms]
        return record

    records = ordered_map(run_trial, range(trials))
    estimates = np.array([r["scaled"] for r in records])
    deviations = np.abs(estimates - reference)
    report = {
        "q": q,
        "n": H.n,
        "trials": trials,
        "solver": solver,
        "seed": seed,
        "scale": scale,
        "estimates": estimates.tolist(),
        "reference": float(reference),
        "mean": float(np.mean(estimates)),
        "sd": float(np.std(estimates)),
        "max_dev": float(np.max(deviations)),
        "mean_dev": float(np.mean(deviations)),
        "trials_detail": records,
    }
    if residual_arrays is not None:
        report["full_residuals"] = [
            cut_norm(W, seed=seed)[0] if H.k == 2 else inf_to_one(W, seed=seed)[0] for W in residual_arrays
        ]
    logger.info(
        f"VSC experiment q={q}: mean {report['mean']:.4f}, sd {report['sd']:.4f}, reference {reference:.4f}"
    )
    return report
