"""
Иерархия исключений проекта.

Каждое исключение знает свой код возврата CLI, чтобы run.py мог
отобразить его без перечисления всех классов.
"""
from typing import Optional

from utils.constants import EXIT_INPUT_ERROR, EXIT_INTERNAL, EXIT_SIZE_LIMIT


class HamiltonianToolError(Exception):
    """Базовое исключение всех операций."""

    exit_code = EXIT_INPUT_ERROR


class InputError(HamiltonianToolError):
    """Некорректные входные данные (файл, флаг, параметр)."""


class HamiltonianError(InputError):
    """Нарушены инварианты гамильтониана (неэрмитов член, неверный носитель)."""


class DimensionError(InputError):
    """Размерности объектов не согласованы."""


class UnsupportedDimensionError(DimensionError):
    """Локальная размерность не является степенью двойки."""


class ParameterError(InputError):
    """Численный параметр вне допустимого диапазона."""


class GraphError(InputError):
    """Некорректный граф (асимметрия, изолированные вершины и т.п.)."""


class InfeasibleError(HamiltonianToolError):
    """Набор ограничений несовместен."""


class SizeLimitError(HamiltonianToolError):
    """Задача превышает настроенный предел размера."""

    exit_code = EXIT_SIZE_LIMIT

    def __init__(self, message: str, limit_name: Optional[str] = None, limit_value: Optional[int] = None):
        if limit_name is not None:
            message = f"{message} (limit {limit_name}={limit_value})"
        super().__init__(message)
        self.limit_name = limit_name
        self.limit_value = limit_value


class EnumerationLimitError(SizeLimitError):
    """Сетка догадок больше ENUMERATION_CAP."""


class InvariantViolation(HamiltonianToolError):
    """Нарушен внутренний инвариант: это ошибка в коде, а не во входе."""

    exit_code = EXIT_INTERNAL
