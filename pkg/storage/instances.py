"""
Файлы экземпляров гамильтонианов и графов (JSON, индексы с нуля).
"""
import json
import logging
from pathlib import Path
from typing import List, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from hamiltonian.model import LocalHamiltonian
from threshold.graph import WeightedGraph
from utils.errors import InputError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class TermRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    support: List[int] = Field(..., description="Кудиты носителя, строго возрастающие")
    matrix_re: List[List[float]] = Field(..., description="Вещественная часть, построчно")
    matrix_im: List[List[float]] = Field(default_factory=list, description="Мнимая часть (пусто = 0)")

    def matrix(self) -> np.ndarray:
        try:
            re = np.asarray(self.matrix_re, dtype=float)
            im = np.asarray(self.matrix_im, dtype=float) if self.matrix_im else np.zeros_like(re)
        except ValueError:
            raise InputError(f"Term on {self.support}: matrix rows have unequal lengths")
        if im.shape != re.shape:
            raise InputError(f"Term on {self.support}: matrix_im shape {im.shape} differs from matrix_re {re.shape}")
        return re + 1j * im


class InstanceFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(..., ge=1)
    d: int = Field(default=2, ge=2)
    k: int = Field(..., ge=1)
    terms: List[TermRecord] = Field(default_factory=list)

    def to_hamiltonian(self) -> LocalHamiltonian:
        return LocalHamiltonian.from_terms(self.n, self.d, self.k, [(t.support, t.matrix()) for t in self.terms])

    @classmethod
    def from_hamiltonian(cls, H: LocalHamiltonian) -> "InstanceFile":
        terms = [
            TermRecord(
                support=list(t.support),
                matrix_re=np.real(t.matrix).tolist(),
                matrix_im=np.imag(t.matrix).tolist() if np.any(np.imag(t.matrix)) else [],
            )
            for t in H.terms
        ]
        return cls(n=H.n, d=H.d, k=H.k, terms=terms)


class GraphFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(..., ge=1)
    edges: List[List[float]] = Field(default_factory=list)

    @field_validator("edges")
    @classmethod
    def validate_edges(cls, value: List[List[float]]) -> List[List[float]]:
        for edge in value:
            if len(edge) != 3:
                raise ValueError(f"Edge {edge} must be [u, v, w]")
            if int(edge[0]) != edge[0] or int(edge[1]) != edge[1]:
                raise ValueError(f"Edge {edge} has non-integer endpoints")
        return value

    def to_graph(self) -> WeightedGraph:
        return WeightedGraph.from_edges(self.n, self.edges)


def _read(path: PathLike, model):
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"File not found: {path}")
    except json.JSONDecodeError as e:
        raise InputError(f"Malformed JSON in {path}: {e}")
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        raise InputError(f"Invalid {model.__name__} in {path}: {e.errors()[0]['msg']}")


def _write(path: PathLike, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")


def load_instance(path: PathLike) -> LocalHamiltonian:
    H = _read(path, InstanceFile).to_hamiltonian()
    logger.info(f"Loaded instance n={H.n} d={H.d} k={H.k} m={H.m} from {path}")
    return H


def save_instance(H: LocalHamiltonian, path: PathLike) -> None:
    _write(path, InstanceFile.from_hamiltonian(H).model_dump())


def load_graph(path: PathLike) -> WeightedGraph:
    g = _read(path, GraphFile).to_graph()
    logger.info(f"Loaded graph n={g.n} with {len(g.edges())} edges from {path}")
    return g


def save_graph(g: WeightedGraph, path: PathLike) -> None:
    _write(path, g.to_dict())
