"""
Обобщённый базис Паули для кудита размерности d = 2^q.

Элемент с индексом c - тензорное произведение q матриц из (I, X, Y, Z);
цифры c в системе счисления по основанию 4 задают множители, старшая
цифра относится к первому кубиту. Индекс 0 - единичный оператор.
Tr[σ_i σ_j] = d·δ_ij.
"""
from functools import lru_cache
from typing import Tuple

import numpy as np

from hamiltonian.model import qubits_per_qudit
from utils.errors import ParameterError

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SINGLE_QUBIT = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)
LABELS = "IXYZ"


@lru_cache(maxsize=None)
def pauli_basis(d: int) -> np.ndarray:
    """
    Returns:
        np.ndarray: массив (d², d, d); только для чтения
    """
    q = qubits_per_qudit(d)
    basis = []
    for index in range(d * d):
        digits = _base4_digits(index, q)
        op = np.ones((1, 1), dtype=complex)
        for digit in digits:
            op = np.kron(op, SINGLE_QUBIT[digit])
        basis.append(op)
    result = np.array(basis)
    result.setflags(write=False)
    return result


@lru_cache(maxsize=None)
def color_label(d: int, index: int) -> str:
    q = qubits_per_qudit(d)
    return "".join(LABELS[digit] for digit in _base4_digits(index, q))


def color_index(d: int, label: str) -> int:
    q = qubits_per_qudit(d)
    if len(label) != q or any(ch not in LABELS for ch in label):
        raise ValueError(f"Bad Pauli label {label!r} for d={d}")
    index = 0
    for ch in label:
        index = 4 * index + LABELS.index(ch)
    return index


def pauli_string(labels: str, d: int = 2) -> np.ndarray:
    """
    Оператор σ^{c_1} ⊗ ... ⊗ σ^{c_k}; для d = 2^q каждая буква-группа длины q
    задаёт один кудит, например "XZ" при d=4 - один кудит.
    """
    q = qubits_per_qudit(d)
    if len(labels) % q:
        raise ParameterError(f"Label {labels!r} does not split into qudits of {q} qubits")
    basis = pauli_basis(d)
    op = np.ones((1, 1), dtype=complex)
    for start in range(0, len(labels), q):
        op = np.kron(op, basis[color_index(d, labels[start:start + q])])
    return op


@lru_cache(maxsize=None)
def measurement_bases(d: int) -> Tuple[np.ndarray, ...]:
    """
    Ортонормированные базисы тензорных измерений Паули.

    Для d = 2^q возвращает 3^q матриц d×d, строки которых - собственные
    векторы произведения выбранных операторов X/Y/Z по кубитам; номер
    строки кодирует исход измерения.
    """
    q = qubits_per_qudit(d)
    single = []
    for op in (PAULI_X, PAULI_Y, PAULI_Z):
        vals, vecs = np.linalg.eigh(op)
        order = np.argsort(-vals)
        single.append(vecs[:, order].T)
    bases = []
    for choice in range(3 ** q):
        rows = np.ones((1, 1), dtype=complex)
        for _ in range(q):
            rows = np.kron(rows, single[choice % 3])
            choice //= 3
        bases.append(rows)
    return tuple(bases)


def _base4_digits(index: int, q: int) -> Tuple[int, ...]:
    digits = []
    for _ in range(q):
        digits.append(index % 4)
        index //= 4
    return tuple(reversed(digits))
