"""
Детерминированная запись результатов команд в JSON.
"""
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from hamiltonian.states import DenseState, ProductState

logger = logging.getLogger(__name__)

TIMING_KEYS = ("timing",)


class ResultEnvelope(BaseModel):
    """Публикуемая схема результата любой команды."""

    model_config = ConfigDict(extra="forbid")

    command: str = Field(..., description="Имя подкоманды")
    version: str = Field(..., description="Версия инструмента")
    seed: Optional[int] = Field(default=None, description="Базовый seed")
    params: Dict[str, Any] = Field(default_factory=dict, description="Проверенные параметры запуска")
    result: Dict[str, Any] = Field(default_factory=dict, description="Результат команды")
    budget: Optional[Dict[str, Any]] = Field(default=None, description="Разбивка бюджета ошибки")
    timing: Dict[str, float] = Field(default_factory=dict, description="Время работы, секунды")


def result_schema() -> Dict:
    return ResultEnvelope.model_json_schema()


def to_jsonable(value: Any) -> Any:
    """numpy, состояния и не-конечные числа в типы JSON."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return {"re": to_jsonable(np.real(value)), "im": to_jsonable(np.imag(value))}
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, ProductState):
        return to_jsonable(value.to_dict())
    if isinstance(value, DenseState):
        return {"n": value.n, "d": value.d, "pure": value.is_pure}
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    return value


def render_result(envelope: ResultEnvelope) -> str:
    payload = to_jsonable(envelope.model_dump())
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def dump_result(envelope: ResultEnvelope, out: Optional[Union[str, Path]] = None) -> str:
    """
    Пишет результат в файл out или в stdout.

    Returns:
        str: записанный JSON
    """
    text = render_result(envelope)
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Result written to {path}")
    return text


def strip_timing(payload: Dict) -> Dict:
    return {k: v for k, v in payload.items() if k not in TIMING_KEYS}
