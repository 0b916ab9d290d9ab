"""
Конфигурационный файл для оценщиков энергии локальных гамильтонианов.
Содержит численные пределы и константы, используемые в различных модулях.
"""
import os

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

# Загружаем переменные окружения из .env файла
load_dotenv()


class Settings(BaseModel):
    model_config = ConfigDict(extra="ignore")

    # Пределы плотных оракулов
    DENSE_PURE_MAX_DIM: int = Field(
        default=2 ** 22,
        description="Максимальная размерность d^n для поиска основного состояния (чистые состояния)",
    )
    DENSE_MIXED_MAX_DIM: int = Field(
        default=4096,
        description="Максимальная размерность d^n для смешанных состояний и статсуммы",
    )
    DENSE_EIGH_MAX_DIM: int = Field(
        default=2048,
        description="До этой размерности используется полная диагонализация, дальше eigsh",
    )

    # Разрезные разложения
    FK_WIDTH_CONSTANT: float = Field(default=8.0, gt=0, description="Константа c_w в пределе ширины c_w/eps^2")
    CUT_HEURISTIC_RESTARTS: int = Field(default=32, description="Число случайных стартов эвристики cut-нормы")
    CUT_EXACT_MAX_N: int = Field(default=20, description="До этого n cut-норма считается перебором")
    TENSOR_EXACT_MAX_N: int = Field(
        default=14,
        description="До этого n норма inf->1 считается перебором; для k-мерных массивов также (k-1)·n ≤ CUT_EXACT_MAX_N, т.е. n ≤ 10 при k=3",
    )
    ATLAS_MAX_SIDES: int = Field(default=24, description="Максимальное число различных сторон разрезов в атласе")
    ATLAS_EXACT_MAX_N: int = Field(default=100000, description="До этого n размеры атомов считаются точно")

    # Релаксация и перебор догадок
    ENUMERATION_CAP: int = Field(default=10 ** 7, description="Предел числа догадок в сетке")
    ESTIMATOR_GUESS_CAP: int = Field(
        default=5000,
        description="Предел числа догадок, проверяемых исчерпывающе; выше включается режим fallback",
    )
    ENUMERATION_FALLBACK: str = Field(default="guided", description="'guided', 'direct' или 'error'")
    GUIDED_RESTARTS: int = Field(default=8, description="Число стартов прямого минимизатора в режиме guided")
    INNER_RADIUS_CONSTANT: float = Field(default=0.1, gt=0, description="Константа c_r внутреннего радиуса")
    FEASIBILITY_MAX_ITER: int = Field(default=4000, description="Предел итераций метода эллипсоидов")
    ENTROPY_EIGEN_FLOOR: float = Field(default=1e-12, gt=0, description="Нижняя граница собственных значений под логарифмом")
    ENTROPY_TOL: float = Field(default=1e-4, gt=0, description="Допуск решателя максимальной энтропии (доля от веса)")

    # Пороговый ранг и Quantum Max-Cut
    QMC_DELTA_CONSTANT: float = Field(default=1.0, gt=0, description="Константа c_delta в шаге сетки QMC")

    # Разреженные графы
    SEPARATOR_CONSTANT: float = Field(default=4.0, gt=0, description="Константа c_s в пределе числа удалённых вершин")
    CLUSTER_MAX_QUDITS: int = Field(default=14, description="Максимальный размер кластера для точной диагонализации")

    # Исполнение
    THREADS: int = Field(default_factory=lambda: os.cpu_count() or 1, description="Число рабочих потоков")

    # Настройки для логирования
    LOG_LEVEL: str = Field(default="INFO")
    LOG_FILE: str = Field(default="")

    @field_validator(
        "DENSE_PURE_MAX_DIM",
        "DENSE_MIXED_MAX_DIM",
        "DENSE_EIGH_MAX_DIM",
        "CUT_HEURISTIC_RESTARTS",
        "CUT_EXACT_MAX_N",
        "TENSOR_EXACT_MAX_N",
        "ATLAS_MAX_SIDES",
        "ATLAS_EXACT_MAX_N",
        "ENUMERATION_CAP",
        "ESTIMATOR_GUESS_CAP",
        "GUIDED_RESTARTS",
        "FEASIBILITY_MAX_ITER",
        "CLUSTER_MAX_QUDITS",
        "THREADS",
    )
    @classmethod
    def ensure_positive(cls, value: int, info):
        if value <= 0:
            raise ValueError(f"{info.field_name} должно быть положительным числом")
        return value

    @field_validator("ENUMERATION_FALLBACK")
    @classmethod
    def fallback_mode(cls, value: str):
        if value not in ("guided", "direct", "error"):
            raise ValueError("ENUMERATION_FALLBACK должен быть 'guided', 'direct' или 'error'")
        return value

    @field_validator("LOG_LEVEL")
    @classmethod
    def log_level_name(cls, value: str):
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError("LOG_LEVEL должен быть одним из DEBUG, INFO, WARNING, ERROR, CRITICAL")
        return value

    @field_validator("ATLAS_MAX_SIDES")
    @classmethod
    def atlas_sides_range(cls, value: int):
        if value > 30:
            raise ValueError("ATLAS_MAX_SIDES не может превышать 30")
        return value

    @model_validator(mode="after")
    def check_dense_limits(self):
        if self.DENSE_MIXED_MAX_DIM > self.DENSE_PURE_MAX_DIM:
            raise ValueError("DENSE_MIXED_MAX_DIM не может превышать DENSE_PURE_MAX_DIM")
        if self.ESTIMATOR_GUESS_CAP > self.ENUMERATION_CAP:
            raise ValueError("ESTIMATOR_GUESS_CAP не может превышать ENUMERATION_CAP")
        return self


def _collect_env() -> dict[str, str]:
    """Получить словарь заданных переменных окружения, игнорируя неопределённые."""

    candidates = [
        "DENSE_PURE_MAX_DIM",
        "DENSE_MIXED_MAX_DIM",
        "DENSE_EIGH_MAX_DIM",
        "FK_WIDTH_CONSTANT",
        "CUT_HEURISTIC_RESTARTS",
        "CUT_EXACT_MAX_N",
        "TENSOR_EXACT_MAX_N",
        "ATLAS_MAX_SIDES",
        "ATLAS_EXACT_MAX_N",
        "ENUMERATION_CAP",
        "ESTIMATOR_GUESS_CAP",
        "ENUMERATION_FALLBACK",
        "GUIDED_RESTARTS",
        "INNER_RADIUS_CONSTANT",
        "FEASIBILITY_MAX_ITER",
        "ENTROPY_EIGEN_FLOOR",
        "ENTROPY_TOL",
        "QMC_DELTA_CONSTANT",
        "SEPARATOR_CONSTANT",
        "CLUSTER_MAX_QUDITS",
        "THREADS",
        "LOG_LEVEL",
        "LOG_FILE",
    ]
    return {key: value for key in candidates if (value := os.getenv(key)) is not None}


try:
    SETTINGS = Settings(**_collect_env())
except ValidationError as exc:  # pragma: no cover - executed at startup
    raise RuntimeError(f"Configuration validation failed:\n{exc}") from exc

# Пределы плотных оракулов
DENSE_PURE_MAX_DIM = SETTINGS.DENSE_PURE_MAX_DIM
DENSE_MIXED_MAX_DIM = SETTINGS.DENSE_MIXED_MAX_DIM
DENSE_EIGH_MAX_DIM = SETTINGS.DENSE_EIGH_MAX_DIM

# Разрезные разложения
FK_WIDTH_CONSTANT = SETTINGS.FK_WIDTH_CONSTANT
CUT_HEURISTIC_RESTARTS = SETTINGS.CUT_HEURISTIC_RESTARTS
CUT_EXACT_MAX_N = SETTINGS.CUT_EXACT_MAX_N
TENSOR_EXACT_MAX_N = SETTINGS.TENSOR_EXACT_MAX_N
ATLAS_MAX_SIDES = SETTINGS.ATLAS_MAX_SIDES
ATLAS_EXACT_MAX_N = SETTINGS.ATLAS_EXACT_MAX_N

# Релаксация
ENUMERATION_CAP = SETTINGS.ENUMERATION_CAP
ESTIMATOR_GUESS_CAP = SETTINGS.ESTIMATOR_GUESS_CAP
ENUMERATION_FALLBACK = SETTINGS.ENUMERATION_FALLBACK
GUIDED_RESTARTS = SETTINGS.GUIDED_RESTARTS
INNER_RADIUS_CONSTANT = SETTINGS.INNER_RADIUS_CONSTANT
FEASIBILITY_MAX_ITER = SETTINGS.FEASIBILITY_MAX_ITER
ENTROPY_EIGEN_FLOOR = SETTINGS.ENTROPY_EIGEN_FLOOR
ENTROPY_TOL = SETTINGS.ENTROPY_TOL

# Пороговый ранг
QMC_DELTA_CONSTANT = SETTINGS.QMC_DELTA_CONSTANT

# Разреженные графы
SEPARATOR_CONSTANT = SETTINGS.SEPARATOR_CONSTANT
CLUSTER_MAX_QUDITS = SETTINGS.CLUSTER_MAX_QUDITS

# Исполнение
THREADS = SETTINGS.THREADS

# Настройки для логирования
LOG_LEVEL = SETTINGS.LOG_LEVEL
LOG_FILE = SETTINGS.LOG_FILE
