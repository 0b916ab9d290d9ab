"""
Детерминированное расщепление seed.

Подсид получается хешированием (seed, ключи) так же, как ключи кэша:
md5 от json.dumps(sort_keys=True). Один и тот же seed всегда даёт
одинаковые подпотоки независимо от порядка вызовов.
"""
import hashlib
import json
from typing import Any

import numpy as np


def derive_seed(seed: int, *keys: Any) -> int:
    """
    Args:
        seed: Базовый 64-битный seed операции
        keys: Метки подпотока (цвет, номер испытания, ...)

    Returns:
        int: 64-битный производный seed
    """
    payload = json.dumps([int(seed), *[_jsonable(k) for k in keys]], sort_keys=True)
    digest = hashlib.md5(payload.encode("utf-8")).hexdigest()
    return int(digest[:16], 16)


def make_rng(seed: int, *keys: Any) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *keys)))


def _jsonable(key: Any) -> Any:
    if isinstance(key, (tuple, list)):
        return [_jsonable(k) for k in key]
    if isinstance(key, np.integer):
        return int(key)
    if isinstance(key, np.floating):
        return float(key)
    return key
