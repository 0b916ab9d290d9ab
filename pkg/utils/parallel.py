"""
Параллельное выполнение независимых задач с сохранением порядка.

ThreadPoolExecutor.map возвращает результаты в порядке входа, поэтому
последующая редукция (минимум с разрешением ничьих по индексу) не
зависит от числа потоков.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

import config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_threads: int = config.THREADS


def set_threads(threads: int) -> None:
    global _threads
    _threads = max(1, int(threads))
    logger.debug(f"Worker threads set to {_threads}")


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Применяет func ко всем элементам, возвращая список в исходном порядке.

    Args:
        func: Чистая функция одного аргумента
        items: Элементы
        threads: Число потоков (по умолчанию текущая настройка)

    Returns:
        List: Результаты в порядке items
    """
    items = list(items)
    workers = threads or _threads
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))
