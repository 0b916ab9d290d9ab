"""
Обработчики подкоманд CLI.

Каждый обработчик принимает проверенный RunConfig и возвращает словарь
результата; ключ "budget", если есть, выносится в конверт отдельно.
"""
import logging
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import config
from controllers.generators import GRAPH_FAMILIES, generate, qmc_graph
from hamiltonian.basis import color_label
from hamiltonian.entanglement import eb_experiment
from hamiltonian.model import LocalHamiltonian
from hamiltonian.oracles import exact_free_energy, exact_ground
from hamiltonian.pauli import pauli_decompose
from regularity.decomposition import ham_cut_decompose
from relaxation.direct import gs_direct_runs
from relaxation.estimator import MODES, fe_estimate, gs_estimate
from sampling.subsample import vsc_experiment
from sparse.clusters import cluster_fe, cluster_gs, plan_pipeline
from storage.instances import InstanceFile, load_graph, load_instance
from storage.results import result_schema
from threshold.graph import WeightedGraph, threshold_rank
from threshold.qmc import qmc_estimate, qmc_hamiltonian
from utils.constants import RECONSTRUCTION_TOL, SOLVERS
from utils.errors import InputError, InvariantViolation, ParameterError

logger = logging.getLogger(__name__)


class RunConfig(BaseModel):
    """Флаги командной строки после проверки."""

    model_config = ConfigDict(extra="forbid")

    command: str
    input: Optional[str] = None
    graph: Optional[str] = None
    eps: float = Field(default=0.5, gt=0)
    gamma: float = Field(default=0.25, gt=0, le=1)
    beta: Optional[float] = Field(default=None, gt=0)
    q: Optional[int] = Field(default=None, ge=1)
    trials: int = Field(default=10, ge=1)
    seed: int = 0
    solver: str = "direct"
    mode: Optional[str] = None
    threads: Optional[int] = Field(default=None, ge=1)
    out: Optional[str] = None
    kparam: int = Field(default=2, ge=1)
    r: Optional[int] = Field(default=None, ge=1)
    l: int = Field(default=2, ge=0)
    restarts: int = Field(default=8, ge=1)
    deltas: List[float] = Field(default_factory=list)
    family: Optional[str] = None
    params: Dict[str, str] = Field(default_factory=dict)
    scan_all: bool = False

    @field_validator("solver")
    @classmethod
    def validate_solver(cls, value: str) -> str:
        if value not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        return value

    @field_validator("mode")
    @classmethod
    def validate_mode(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        return value

    @field_validator("deltas")
    @classmethod
    def validate_deltas(cls, value: List[float]) -> List[float]:
        if any(d <= 0 for d in value):
            raise ValueError("threshold deltas must be positive")
        return value

    @model_validator(mode="after")
    def check_required(self):
        if self.command in NEEDS_INSTANCE and not self.input:
            raise ValueError(f"{self.command} needs an instance file (--input)")
        if self.command in NEEDS_GRAPH and not (self.graph or self.input):
            raise ValueError(f"{self.command} needs a graph file (--graph) or a 2-local instance (--input)")
        if self.command in NEEDS_BETA and self.beta is None:
            raise ValueError(f"{self.command} needs --beta")
        if self.command == "vsc" and self.q is None:
            raise ValueError("vsc needs --q")
        if self.command == "gen" and not self.family:
            raise ValueError("gen needs --family")
        return self


NEEDS_INSTANCE = {
    "decompose", "cutdecomp", "gs-exact", "gs-direct", "gs-estimate", "fe-exact",
    "fe-estimate", "vsc", "sparse-gs", "sparse-fe", "eb-experiment", "info",
}
NEEDS_GRAPH = {"qmc", "threshold-rank"}
NEEDS_BETA = {"fe-exact", "fe-estimate", "sparse-fe"}


def _instance(cfg: RunConfig) -> LocalHamiltonian:
    return load_instance(cfg.input)


def _graph(cfg: RunConfig) -> WeightedGraph:
    if cfg.graph:
        return load_graph(cfg.graph)
    return WeightedGraph.from_hamiltonian(_instance(cfg))


def cmd_info(cfg: RunConfig) -> Dict:
    return _instance(cfg).summary()


def cmd_decompose(cfg: RunConfig) -> Dict:
    H = _instance(cfg)
    pd = pauli_decompose(H)
    errors = [float(np.linalg.norm(pd.reconstruct_term(i) - t.matrix)) for i, t in enumerate(H.terms)]
    worst = max(errors, default=0.0)
    if worst > RECONSTRUCTION_TOL:
        raise InvariantViolation(f"Pauli round trip error {worst:.3g} exceeds {RECONSTRUCTION_TOL}")
    colors = ["".join(color_label(H.d, c) for c in color) for color in pd.nonzero_colors()]
    return {
        "summary": H.summary(),
        "nonzero_colors": colors,
        "max_reconstruction_error": worst,
    }


def cmd_cutdecomp(cfg: RunConfig) -> Dict:
    hcd = ham_cut_decompose(_instance(cfg), cfg.eps, seed=cfg.seed)
    result = hcd.to_dict()
    result["budget"] = {"residual": hcd.residual_bound(), "diagonal": hcd.diagonal_bound()}
    return result


def cmd_gs_exact(cfg: RunConfig) -> Dict:
    energy, _ = exact_ground(_instance(cfg))
    return {"energy": energy}


def cmd_gs_direct(cfg: RunConfig) -> Dict:
    runs = gs_direct_runs(_instance(cfg), restarts=cfg.restarts, seed=cfg.seed)
    best = min(range(len(runs)), key=lambda i: (runs[i]["value"], i))
    return {
        "energy": runs[best]["value"],
        "state": runs[best]["state"].to_dict(),
        "run_values": [run["value"] for run in runs],
        "best_run": best,
    }


def cmd_gs_estimate(cfg: RunConfig) -> Dict:
    value, witness, report = gs_estimate(_instance(cfg), cfg.eps, cfg.gamma, seed=cfg.seed, mode=cfg.mode, scan_all=cfg.scan_all)
    report["witness"] = witness.to_dict()
    return report


def cmd_fe_exact(cfg: RunConfig) -> Dict:
    return {"free_energy": exact_free_energy(_instance(cfg), cfg.beta), "beta": cfg.beta}


def cmd_fe_estimate(cfg: RunConfig) -> Dict:
    value, witness, report = fe_estimate(_instance(cfg), cfg.beta, cfg.eps, cfg.gamma, seed=cfg.seed, mode=cfg.mode)
    report["witness"] = witness.to_dict()
    return report


def cmd_qmc(cfg: RunConfig) -> Dict:
    g = _graph(cfg)
    value, witness, report = qmc_estimate(g, cfg.eps, seed=cfg.seed, mode=cfg.mode)
    report["witness"] = witness.to_dict()
    if g.edges() and 2 ** g.n <= config.DENSE_MIXED_MAX_DIM:
        report["exact_maximum"] = -exact_ground(qmc_hamiltonian(g).scaled(-1.0))[0]
    return report


def cmd_threshold_rank(cfg: RunConfig) -> Dict:
    deltas = cfg.deltas or [cfg.eps / 2]
    return threshold_rank(_graph(cfg), deltas).to_dict()


def cmd_vsc(cfg: RunConfig) -> Dict:
    return vsc_experiment(
        _instance(cfg), cfg.q, cfg.trials, solver=cfg.solver, seed=cfg.seed, eps=cfg.eps, gamma=cfg.gamma
    )


def cmd_sparse_gs(cfg: RunConfig) -> Dict:
    H = _instance(cfg)
    partition, plan = plan_pipeline(H, cfg.kparam, seed=cfg.seed, r=cfg.r)
    energy, _, report = cluster_gs(H, partition)
    report.update({"energy": energy, "plan": plan})
    return report


def cmd_sparse_fe(cfg: RunConfig) -> Dict:
    H = _instance(cfg)
    partition, plan = plan_pipeline(H, cfg.kparam, seed=cfg.seed, r=cfg.r, mixed=True)
    value, _, report = cluster_fe(H, partition, cfg.beta)
    report.update({"free_energy": value, "plan": plan})
    return report


def cmd_eb_experiment(cfg: RunConfig) -> Dict:
    H = _instance(cfg)
    _, rho = exact_ground(H)
    return eb_experiment(H, rho, cfg.l, cfg.trials, cfg.seed, beta=cfg.beta)


def cmd_gen(cfg: RunConfig) -> Dict:
    """Документ экземпляра (гамильтониан или граф QMC), а не конверт."""
    family = cfg.family
    if family.startswith("qmc-"):
        kind = family[len("qmc-"):]
        if kind not in GRAPH_FAMILIES:
            raise ParameterError(f"Unknown graph family {kind!r}; expected one of {GRAPH_FAMILIES}")
        g = qmc_graph(
            kind,
            int(cfg.params.get("n", 4)),
            cfg.seed,
            degree=int(cfg.params.get("degree", 3)),
            p=float(cfg.params.get("p", 0.5)),
            weighted=cfg.params.get("weighted", "false").lower() == "true",
        )
        return g.to_dict()
    try:
        H = generate(family, dict(cfg.params), cfg.seed)
    except ValueError as e:
        raise InputError(f"Bad generator parameters: {e}")
    return InstanceFile.from_hamiltonian(H).model_dump()


def cmd_schema(cfg: RunConfig) -> Dict:
    return result_schema()


COMMANDS: Dict[str, Callable[[RunConfig], Dict]] = {
    "decompose": cmd_decompose,
    "cutdecomp": cmd_cutdecomp,
    "gs-exact": cmd_gs_exact,
    "gs-direct": cmd_gs_direct,
    "gs-estimate": cmd_gs_estimate,
    "fe-exact": cmd_fe_exact,
    "fe-estimate": cmd_fe_estimate,
    "qmc": cmd_qmc,
    "threshold-rank": cmd_threshold_rank,
    "vsc": cmd_vsc,
    "sparse-gs": cmd_sparse_gs,
    "sparse-fe": cmd_sparse_fe,
    "eb-experiment": cmd_eb_experiment,
    "gen": cmd_gen,
    "schema": cmd_schema,
    "info": cmd_info,
}

RAW_OUTPUT = {"gen", "schema"}
