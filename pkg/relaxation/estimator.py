"""
Оценщики энергии основного состояния и свободной энергии по
произведённым состояниям через разрезное разложение и сетку догадок.

Режимы перебора:
    exhaustive - все точки сетки, по возрастанию значения догадки;
    guided     - догадки из округлённых свидетелей прямого минимизатора
                 плюс локальный поиск с шагом ±Δ;
    direct     - только прямой минимизатор (с предупреждением).
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from hamiltonian.model import LocalHamiltonian
from hamiltonian.oracles import check_beta, product_free_energy
from hamiltonian.pauli import pauli_decompose, product_energy
from hamiltonian.states import ProductState
from regularity.atlas import AtomSizes, RefinementAtlas, build_atlas, estimate_atom_sizes
from regularity.decomposition import HamiltonianCutDecomposition, ham_cut_decompose
from relaxation.constraints import ConstraintSet, compressed_constraints, full_constraints
from relaxation.direct import fe_direct, fe_direct_runs, gs_direct, gs_direct_runs
from relaxation.entropy import max_entropy
from relaxation.feasibility import UNDECIDED, FeasibilityResult, check_feasible
from relaxation.guesses import GuessGrid, GuessVector, iterate_grid
from relaxation.witness import expand_witness, round_to_pure
from utils.errors import EnumerationLimitError, InvariantViolation, ParameterError
from utils.parallel import ordered_map
from utils.seeding import derive_seed

logger = logging.getLogger(__name__)

MODES = ("exhaustive", "guided", "direct")
BATCH = 16
LOCAL_SEARCH_ROUNDS = 200
GRID_CONSTANT = 8.0


@dataclass(eq=False)
class EstimatorContext:
    hcd: HamiltonianCutDecomposition
    atlas: RefinementAtlas
    sizes: AtomSizes
    atom_weights: np.ndarray
    entropy_weights: np.ndarray
    grid: GuessGrid
    gamma: float

    def constraints(self, values: Sequence[float]) -> ConstraintSet:
        return compressed_constraints(
            self.atlas,
            self.atom_weights,
            self.grid.variables,
            values,
            self.grid.slack,
            self.hcd.d,
            entropy_weights=self.entropy_weights,
            gamma=self.gamma,
            size_error=self.sizes.error,
        )

    def check(self, values: Sequence[float], hint: Optional[np.ndarray] = None) -> FeasibilityResult:
        return check_feasible(self.constraints(values), hint=hint)

    def compress(self, state: ProductState) -> np.ndarray:
        return self.atlas.compress(state, self.hcd.vertex_weights)

    def expand(self, compressed: np.ndarray) -> ProductState:
        return expand_witness(self.atlas, compressed, self.hcd.d)

    def full_violation(self, values: Sequence[float], state: ProductState) -> float:
        """Нарушение ограничений догадки развёрнутым состоянием в форме по вершинам."""
        cs = full_constraints(
            self.hcd.n,
            self.hcd.d,
            self.hcd.vertex_weights,
            self.grid.variables,
            values,
            self.grid.slack + self.sizes.error * self.atlas.atom_count,
            gamma=self.gamma,
        )
        return cs.max_violation(state.alphas)


def prepare(hcd: HamiltonianCutDecomposition, gamma: float, seed: int = 0, delta_fail: float = 0.01) -> EstimatorContext:
    """Атлас, размеры атомов и сетка догадок для разложения."""
    atlas = build_atlas(hcd)
    if np.allclose(hcd.vertex_weights, 1.0):
        target = min(0.5, gamma / max(1, atlas.atom_count))
        sizes = estimate_atom_sizes(atlas, target, delta_fail, seed=derive_seed(seed, "sizes"))
        atom_weights = sizes.sizes
    else:
        counts = atlas.exact_sizes()
        sizes = AtomSizes(sizes=counts, exact=True, error=0.0, samples=atlas.n, delta_fail=0.0)
        atom_weights = atlas.atom_weights(hcd.vertex_weights)
    grid = GuessGrid.build(hcd, gamma, noisy=not sizes.exact)
    logger.info(
        f"Estimator grid: {len(grid.variables)} coordinates, {grid.size()} points, "
        f"{atlas.atom_count} atoms, pitch {grid.pitch:.4g}"
    )
    return EstimatorContext(
        hcd=hcd,
        atlas=atlas,
        sizes=sizes,
        atom_weights=np.asarray(atom_weights, dtype=float),
        entropy_weights=np.asarray(sizes.sizes, dtype=float),
        grid=grid,
        gamma=gamma,
    )


def _telescoping(deltas: List[float], bounds: List[float]) -> float:
    """|Π g_j - Π m_j| при |g_j - m_j| ≤ Δ_j, |m_j| ≤ B_j."""
    total = 0.0
    for j, delta in enumerate(deltas):
        if delta == 0.0:
            continue
        term = delta
        for l in range(len(bounds)):
            if l < j:
                term *= bounds[l] + deltas[l]
            elif l > j:
                term *= bounds[l]
        total += term
    return total


def error_budget(ctx: EstimatorContext, nominal: Optional[float] = None) -> Dict:
    """
    Явный бюджет ошибки оценки:
        residual - измеренная норма ∞→1 остатков вне диагонали;
        grid     - отклонение Π r от Π m при |r - m| ≤ Δ (телескопическая
                   оценка и форма с константой 8 при k = 2);
        diagonal - вклад диагональных кортежей в Σ d_i Π r.
    """
    hcd, grid = ctx.hcd, ctx.grid
    size_slack = ctx.atlas.atom_count * ctx.sizes.error if not ctx.sizes.exact else 0.0
    delta = grid.slack + size_slack
    total_weight = float(np.sum(np.abs(hcd.vertex_weights)))
    telescoping = 0.0
    constant_form = 0.0
    for block in hcd.blocks:
        dec = block.decomposition
        for color in block.colors:
            for piece in dec.pieces:
                deltas = [delta if c != 0 else 0.0 for c in color]
                bounds = [hcd.side_weight(side) for side in piece.sides]
                telescoping += abs(block.weight) * abs(piece.coeff) * _telescoping(deltas, bounds)
            if hcd.k == 2 and dec.width:
                gamma_eff = delta / total_weight if total_weight else 0.0
                constant_form += (
                    abs(block.weight)
                    * GRID_CONSTANT
                    * math.sqrt(dec.coefficient_length)
                    * total_weight ** 2
                    * gamma_eff
                    * math.sqrt(dec.width)
                )
    grid_term = min(telescoping, constant_form) if hcd.k == 2 and constant_form > 0 else telescoping
    residual = hcd.residual_bound()
    diagonal = hcd.diagonal_bound()
    total = residual + grid_term + diagonal
    budget = {
        "residual": residual,
        "residual_exact": hcd.residual_exact,
        "grid": grid_term,
        "grid_telescoping": telescoping,
        "grid_constant8": constant_form if hcd.k == 2 else None,
        "diagonal": diagonal,
        "size_error": size_slack,
        "total": total,
    }
    if nominal is not None:
        budget["nominal"] = nominal
        budget["nominal_tighter"] = bool(nominal < total)
        if nominal < total:
            logger.info(f"Nominal error form {nominal:.4g} is tighter than the measured budget {total:.4g}")
    return budget


def select_mode(grid_size: int, mode: Optional[str] = None) -> str:
    if mode is not None:
        if mode not in MODES:
            raise ParameterError(f"Unknown estimator mode {mode!r}; expected one of {MODES}")
        return mode
    if grid_size <= config.ESTIMATOR_GUESS_CAP:
        return "exhaustive"
    fallback = config.ENUMERATION_FALLBACK
    if fallback == "error":
        if grid_size > config.ENUMERATION_CAP:
            raise EnumerationLimitError(
                f"Guess grid has {grid_size} points; increase gamma or use direct mode",
                "ENUMERATION_CAP",
                config.ENUMERATION_CAP,
            )
        return "exhaustive"
    logger.warning(f"Guess grid of {grid_size} points exceeds the exhaustive cap; using {fallback} mode")
    return fallback


def _exhaustive_ground(ctx: EstimatorContext, scan_all: bool) -> Tuple[GuessVector, float, FeasibilityResult, Dict]:
    guesses = list(iterate_grid(ctx.grid))
    values = [ctx.hcd.guess_value(g.values) for g in guesses]
    order = sorted(range(len(guesses)), key=lambda i: (values[i], guesses[i].index))
    stats = {"total": len(guesses), "checked": 0, "feasible": 0, "undecided": 0}
    best = None
    for start in range(0, len(order), BATCH):
        batch = order[start:start + BATCH]
        results = ordered_map(lambda i: ctx.check(guesses[i].values), batch)
        for i, result in zip(batch, results):
            stats["checked"] += 1
            if result.status == UNDECIDED:
                stats["undecided"] += 1
            if result.feasible:
                stats["feasible"] += 1
                if best is None:
                    best = (guesses[i], values[i], result)
        if best is not None and not scan_all:
            break
    if best is None:
        raise InvariantViolation(
            f"No feasible guess among {stats['checked']} checked ({stats['undecided']} undecided); "
            "every product state lies in some feasible guess"
        )
    return best[0], best[1], best[2], stats


def _guided_search(
    ctx: EstimatorContext,
    seeds: List[ProductState],
    objective: Callable[[Tuple[float, ...], FeasibilityResult], float],
    known_value: Optional[Callable[[np.ndarray], float]] = None,
) -> Tuple[Tuple[float, ...], float, FeasibilityResult, Dict]:
    """
    Догадки из округлённых намагниченностей затравочных состояний, затем
    локальный поиск: переход к соседу со строго меньшим значением.
    """
    stats = {"total": ctx.grid.size(), "checked": 0, "feasible": 0, "undecided": 0, "seeds": len(seeds)}
    cache: Dict[Tuple[float, ...], Tuple[float, FeasibilityResult]] = {}

    def evaluate(values: np.ndarray, hint: Optional[np.ndarray] = None) -> Tuple[float, FeasibilityResult]:
        key = tuple(float(v) for v in values)
        if key not in cache:
            result = ctx.check(key, hint=hint)
            stats["checked"] += 1
            stats["undecided"] += int(result.status == UNDECIDED)
            stats["feasible"] += int(result.feasible)
            cache[key] = (objective(key, result) if result.feasible else math.inf, result)
        return cache[key]

    for state in seeds:
        values = ctx.grid.round(ctx.hcd.side_values(state))
        if ctx.grid.contains(values):
            evaluate(values, hint=ctx.compress(state))
    feasible = [(v, key) for key, (v, r) in cache.items() if r.feasible]
    if not feasible:
        raise InvariantViolation("No seeded guess was feasible; every product state lies in some feasible guess")
    current_value, current = min(feasible)

    for _ in range(LOCAL_SEARCH_ROUNDS):
        moved = False
        for neighbor in ctx.grid.neighbors(np.array(current)):
            if known_value is not None and known_value(neighbor) >= current_value - 1e-12:
                continue
            value, result = evaluate(neighbor)
            if result.feasible and value < current_value - 1e-12:
                current_value, current = value, tuple(float(v) for v in neighbor)
                moved = True
                break
        if not moved:
            break
    return current, current_value, cache[current][1], stats


def estimate_ground(
    hcd: HamiltonianCutDecomposition,
    H: LocalHamiltonian,
    gamma: float,
    seed: int = 0,
    mode: Optional[str] = None,
    scan_all: bool = False,
    nominal: Optional[float] = None,
) -> Tuple[float, ProductState, Dict]:
    """
    V̂ = min по совместным догадкам Σ d_i Π_j r_ij для готового разложения.

    Args:
        hcd: Разложение минимизируемого гамильтониана H
        H: Тот же гамильтониан (для энергии свидетеля и затравок)
        gamma: Шаг сетки
        seed: Seed
        mode: exhaustive | guided | direct (по умолчанию по размеру сетки)
        scan_all: Проверять все догадки, а не до первой совместной
        nominal: Номинальная оценка ошибки для сравнения с бюджетом

    Returns:
        Tuple: (v_hat, свидетель, отчёт)
    """
    ctx = prepare(hcd, gamma, seed)
    chosen = select_mode(ctx.grid.size(), mode)
    pd = pauli_decompose(H)
    report: Dict = {
        "mode": chosen,
        "gamma": gamma,
        "pitch": ctx.grid.pitch,
        "atoms": ctx.atlas.atom_count,
        "sides": len(ctx.atlas.sides),
        "side_variables": len(ctx.grid.variables),
        "sizes_exact": ctx.sizes.exact,
        "widths": hcd.widths(),
    }

    if chosen == "direct":
        logger.warning("Direct mode: the estimate is the best product state found, without a guess-grid certificate")
        value, witness = gs_direct(H, restarts=config.GUIDED_RESTARTS, seed=derive_seed(seed, "direct"))
        report.update({"guesses": {"total": ctx.grid.size(), "checked": 0, "feasible": 0, "undecided": 0}})
        report["budget"] = {"total": None}
        v_hat = value
    else:
        if chosen == "exhaustive":
            guess, v_hat, result, stats = _exhaustive_ground(ctx, scan_all)
            key = guess.values
            report["argmin_index"] = guess.index
        else:
            runs = gs_direct_runs(H, restarts=config.GUIDED_RESTARTS, seed=derive_seed(seed, "guided"))
            seeds = [run["state"] for run in runs] + [ProductState.maximally_mixed(H.n, H.d)]

            key, v_hat, result, stats = _guided_search(
                ctx, seeds, lambda values, _: hcd.guess_value(values), known_value=hcd.guess_value
            )
        witness = ctx.expand(result.witness)
        report["guesses"] = stats
        report["witness_full_violation"] = ctx.full_violation(key, witness)
        report["feasibility"] = result.to_dict()
        report["budget"] = error_budget(ctx, nominal)

    rounded = round_to_pure(witness, H)
    report["estimate"] = float(v_hat)
    report["witness_energy"] = product_energy(pd, witness)
    report["rounded_energy"] = product_energy(pd, rounded)
    logger.info(f"Ground estimate {v_hat:.6f} ({chosen}), witness energy {report['witness_energy']:.6f}")
    return float(v_hat), witness, report


def gs_estimate(
    H: LocalHamiltonian,
    eps: float,
    gamma: float,
    seed: int = 0,
    mode: Optional[str] = None,
    scan_all: bool = False,
) -> Tuple[float, ProductState, Dict]:
    """
    Оценка min Tr[Hρ] по произведённым состояниям.

    Raises:
        ParameterError: k ∉ {2, 3}, eps ≤ 0 или γ вне (0, 1]
        EnumerationLimitError: сетка больше ENUMERATION_CAP при fallback=error
        InvariantViolation: нет ни одной совместной догадки
    """
    hcd = ham_cut_decompose(H, eps, seed=derive_seed(seed, "decompose"))
    nominal = eps * H.n ** (H.k / 2.0) * H.JF
    v_hat, witness, report = estimate_ground(hcd, H, gamma, seed, mode=mode, scan_all=scan_all, nominal=nominal)
    report["eps"] = eps
    report["decomposition"] = {"pieces": hcd.pieces_total, "widths": hcd.widths(), "constant": hcd.constant}
    return v_hat, witness, report


def fe_estimate(
    H: LocalHamiltonian,
    beta: float,
    eps: float,
    gamma: float,
    seed: int = 0,
    mode: Optional[str] = None,
    entropy_tol: Optional[float] = None,
) -> Tuple[float, ProductState, Dict]:
    """
    Оценка свободной энергии min_σ (Tr[Hσ] - S(σ)/β) по произведённым σ.

    Для каждой совместной догадки решается задача максимальной энтропии;
    f_hat = min по совместным догадкам (Σ d_i Π r - Õ/β), где Õ - значение задачи
    максимальной энтропии. witness_free_energy в отчёте - вариационная
    свободная энергия развёрнутого свидетеля (всегда ≥ точной).

    Returns:
        Tuple: (f_hat, свидетель, отчёт)
    """
    check_beta(beta)
    tol = config.ENTROPY_TOL if entropy_tol is None else entropy_tol
    hcd = ham_cut_decompose(H, eps, seed=derive_seed(seed, "decompose"))
    ctx = prepare(hcd, gamma, seed)
    chosen = select_mode(ctx.grid.size(), mode)
    report: Dict = {
        "mode": chosen,
        "beta": beta,
        "eps": eps,
        "gamma": gamma,
        "pitch": ctx.grid.pitch,
        "atoms": ctx.atlas.atom_count,
        "side_variables": len(ctx.grid.variables),
        "sizes_exact": ctx.sizes.exact,
    }
    nominal = eps * H.n ** (H.k / 2.0) * H.JF

    if chosen == "direct":
        logger.warning("Direct mode: the free-energy estimate is the best mean-field state found")
        f_hat, witness = fe_direct(H, beta, restarts=config.GUIDED_RESTARTS, seed=derive_seed(seed, "direct"))
        report["estimator_value"] = None
        report["witness_free_energy"] = f_hat
        report["budget"] = {"total": None}
        report["estimate"] = f_hat
        return f_hat, witness, report

    solved: Dict[Tuple[float, ...], Dict] = {}

    def solve(values: Tuple[float, ...], result: FeasibilityResult) -> float:
        cs = ctx.constraints(values)
        entropy, compressed, info = max_entropy(cs, tol=tol)
        estimator = ctx.hcd.guess_value(values) - entropy / beta
        solved[values] = {
            "estimator": estimator,
            "compressed": compressed,
            "certified": info["certified"],
        }
        return estimator

    if chosen == "exhaustive":
        guesses = list(iterate_grid(ctx.grid))
        results = ordered_map(lambda g: ctx.check(g.values), guesses)
        feasible = [(g, r) for g, r in zip(guesses, results) if r.feasible]
        if not feasible:
            raise InvariantViolation("No feasible guess; every product state lies in some feasible guess")
        scores = ordered_map(lambda item: solve(item[0].values, item[1]), feasible)
        best = min(range(len(feasible)), key=lambda i: (scores[i], feasible[i][0].index))
        key = feasible[best][0].values
        report["guesses"] = {
            "total": len(guesses),
            "checked": len(guesses),
            "feasible": len(feasible),
            "undecided": sum(1 for r in results if r.status == UNDECIDED),
        }
    else:
        seeds = [run["state"] for run in fe_direct_runs(H, beta, restarts=config.GUIDED_RESTARTS, seed=derive_seed(seed, "guided"))]
        seeds += [run["state"] for run in gs_direct_runs(H, restarts=2, seed=derive_seed(seed, "guided-gs"))]
        key, _, _, stats = _guided_search(ctx, seeds, solve)
        report["guesses"] = stats

    entry = solved[key]
    witness = ctx.expand(entry["compressed"])
    f_hat = float(entry["estimator"])
    energy_budget = error_budget(ctx, nominal)
    thermal = tol * float(np.sum(ctx.entropy_weights)) / beta
    report["budget"] = {
        "energy": energy_budget,
        "thermal": thermal,
        "total": 2.0 * energy_budget["total"] + thermal,
    }
    report["estimate"] = f_hat
    report["estimator_value"] = f_hat
    report["witness_free_energy"] = product_free_energy(H, witness, beta)
    report["witness_full_violation"] = ctx.full_violation(key, witness)
    report["entropy_certified"] = all(s["certified"] for s in solved.values())
    logger.info(
        f"Free-energy estimate {f_hat:.6f} ({chosen}), witness free energy {report['witness_free_energy']:.6f}"
    )
    return f_hat, witness, report
