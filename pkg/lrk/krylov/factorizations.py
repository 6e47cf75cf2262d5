# lrk/krylov/factorizations.py

import logging
from typing import Callable, Optional, Tuple

import numpy as np
from attrs import define, field
from scipy.sparse.linalg import LinearOperator, aslinearoperator

logger = logging.getLogger(__name__)

# h_{k+1,k} <= BREAKDOWN_TOL·‖H‖_F считается обрывом
BREAKDOWN_TOL = 1e-12

Preconditioner = Callable[[np.ndarray], np.ndarray]


class FactorizationError(Exception):
    """Исключение, возникающее при ошибках построения крыловских базисов."""
    pass


class ColumnStore:
    """Столбцы базиса в заранее выделенном массиве с удвоением ёмкости."""

    def __init__(self, length: int, capacity: int = 16) -> None:
        self._data = np.empty((length, max(capacity, 1)))
        self.count = 0

    def append(self, column: np.ndarray) -> None:
        if self.count == self._data.shape[1]:
            grown = np.empty((self._data.shape[0], 2 * self._data.shape[1]))
            grown[:, :self.count] = self._data[:, :self.count]
            self._data = grown
        self._data[:, self.count] = column
        self.count += 1

    def column(self, j: int) -> np.ndarray:
        return self._data[:, j]

    @property
    def matrix(self) -> np.ndarray:
        return self._data[:, :self.count]


def _grow(matrix: np.ndarray, rows: int, cols: int) -> np.ndarray:
    grown = np.zeros((rows, cols))
    grown[:matrix.shape[0], :matrix.shape[1]] = matrix
    return grown


def orthogonalize(w: np.ndarray, basis: ColumnStore) -> Tuple[np.ndarray, np.ndarray]:
    """
    Модифицированный Грам–Шмидт с одним повторным проходом.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Ортогонализованный вектор и коэффициенты.
    """
    coeffs = np.zeros(basis.count)
    w = w.copy()
    for _ in range(2):
        for j in range(basis.count):
            q = basis.column(j)
            c = q @ w
            w -= c * q
            coeffs[j] += c
    return w, coeffs


@define(eq=False)
class ArnoldiState:
    """
    Частичная (гибкая) факторизация Арнольди: Op·Z_k = V_{k+1}·H_k.

    В стандартном случае Z_k = V_k. При обрыве новый столбец V не добавляется,
    а последняя строка H нулевая.
    """
    beta: float
    V: ColumnStore
    Z: ColumnStore
    H: np.ndarray = field(factory=lambda: np.zeros((1, 0)))
    breakdown: bool = False
    flexible: bool = False

    @property
    def k(self) -> int:
        return self.H.shape[1]

    @property
    def basis(self) -> np.ndarray:
        return self.V.matrix

    @property
    def solution_basis(self) -> np.ndarray:
        return self.Z.matrix

    @property
    def hessenberg(self) -> np.ndarray:
        return self.H


def _require_square(op: LinearOperator) -> None:
    if op.shape[0] != op.shape[1]:
        logger.error(f"Оператор {op.shape} не квадратный")
        raise FactorizationError(f"Требуется квадратный оператор, получено {op.shape}")


def start_arnoldi(b: np.ndarray, capacity: int = 16) -> ArnoldiState:
    """
    Начальное состояние с v₁ = b/‖b‖₂.

    Raises:
        FactorizationError: Нулевой начальный вектор.
    """
    b = np.asarray(b, dtype=float).reshape(-1)
    beta = float(np.linalg.norm(b))
    if beta == 0:
        logger.error("Нулевой начальный вектор Арнольди")
        raise FactorizationError("Начальный вектор не может быть нулевым")
    V = ColumnStore(b.size, capacity + 1)
    V.append(b / beta)
    return ArnoldiState(beta=beta, V=V, Z=ColumnStore(b.size, capacity))


def arnoldi_step(
    state: ArnoldiState, op: LinearOperator, precondition: Optional[Preconditioner] = None,
) -> ArnoldiState:
    """
    Один шаг (гибкого) Арнольди: z_k = P_k(v_k), w = Op z_k, ортогонализация к V.

    Args:
        state (ArnoldiState): Текущее состояние (изменяется на месте).
        op (LinearOperator): Квадратный оператор.
        precondition (Optional[Callable]): Переобуславливатель текущего шага.

    Returns:
        ArnoldiState: То же состояние, расширенное на один шаг.

    Raises:
        FactorizationError: Неквадратный оператор или шаг после обрыва.
    """
    op = aslinearoperator(op)
    _require_square(op)
    if state.breakdown:
        raise FactorizationError("Шаг Арнольди после обрыва невозможен")
    k = state.k
    v = state.V.column(k)
    z = v if precondition is None else np.asarray(precondition(v), dtype=float).reshape(-1)
    state.flexible = state.flexible or precondition is not None
    state.Z.append(z)

    w, coeffs = orthogonalize(op.matvec(z), state.V)
    h_next = float(np.linalg.norm(w))
    H = _grow(state.H, k + 2, k + 1)
    H[:k + 1, k] = coeffs
    H[k + 1, k] = h_next
    state.H = H
    if h_next <= BREAKDOWN_TOL * np.linalg.norm(H):
        H[k + 1, k] = 0.0
        state.breakdown = True
        logger.warning(f"Обрыв Арнольди на шаге {k + 1}")
    else:
        state.V.append(w / h_next)
    return state


@define(eq=False)
class GkbState:
    """
    Частичная (гибкая) бидиагонализация Голуба–Кахана:
    A·Z_k = U_{k+1}·M_k и Aᵀ·U_{k+1} = V_{k+1}·T_{k+1}.

    Без переобуславливателя Z_k = V_k, M_k нижняя бидиагональная.
    """
    beta: float
    U: ColumnStore
    V: ColumnStore
    Z: ColumnStore
    M: np.ndarray = field(factory=lambda: np.zeros((1, 0)))
    T: np.ndarray = field(factory=lambda: np.zeros((1, 1)))
    breakdown: bool = False
    flexible: bool = False

    @property
    def k(self) -> int:
        return self.M.shape[1]

    @property
    def solution_basis(self) -> np.ndarray:
        return self.Z.matrix

    @property
    def projected(self) -> np.ndarray:
        return self.M


def start_gkb(op: LinearOperator, b: np.ndarray, capacity: int = 16) -> GkbState:
    """
    Начало GKB: u₁ = b/‖b‖₂, t₁₁ v₁ = Aᵀu₁.

    Raises:
        FactorizationError: Нулевая правая часть.
    """
    op = aslinearoperator(op)
    b = np.asarray(b, dtype=float).reshape(-1)
    beta = float(np.linalg.norm(b))
    if beta == 0:
        logger.error("Нулевая правая часть GKB")
        raise FactorizationError("Начальный вектор не может быть нулевым")
    M_rows, N = op.shape
    U = ColumnStore(M_rows, capacity + 1)
    V = ColumnStore(N, capacity + 1)
    U.append(b / beta)
    w = op.rmatvec(U.column(0))
    t11 = float(np.linalg.norm(w))
    state = GkbState(beta=beta, U=U, V=V, Z=ColumnStore(N, capacity), T=np.array([[t11]]))
    if t11 == 0:
        state.breakdown = True
        logger.warning("Обрыв GKB: Aᵀb = 0")
    else:
        V.append(w / t11)
    return state


def gkb_step(
    state: GkbState, op: LinearOperator, precondition: Optional[Preconditioner] = None,
) -> GkbState:
    """
    Один шаг (гибкого) Голуба–Кахана.

    z_i = P_i(v_i); A z_i ортогонализуется к U (столбец M); затем Aᵀu_{i+1}
    ортогонализуется к V (столбец T).

    Raises:
        FactorizationError: Шаг после обрыва.
    """
    op = aslinearoperator(op)
    if state.breakdown:
        raise FactorizationError("Шаг GKB после обрыва невозможен")
    i = state.k
    v = state.V.column(i)
    z = v if precondition is None else np.asarray(precondition(v), dtype=float).reshape(-1)
    state.flexible = state.flexible or precondition is not None
    state.Z.append(z)

    w, coeffs = orthogonalize(op.matvec(z), state.U)
    m_next = float(np.linalg.norm(w))
    M = _grow(state.M, i + 2, i + 1)
    M[:i + 1, i] = coeffs
    M[i + 1, i] = m_next
    state.M = M
    if m_next <= BREAKDOWN_TOL * np.linalg.norm(M):
        M[i + 1, i] = 0.0
        state.breakdown = True
        logger.warning(f"Обрыв GKB (A z) на шаге {i + 1}")
        return state
    state.U.append(w / m_next)

    w, coeffs = orthogonalize(op.rmatvec(state.U.column(i + 1)), state.V)
    t_next = float(np.linalg.norm(w))
    T = _grow(state.T, i + 2, i + 2)
    T[:i + 1, i + 1] = coeffs
    T[i + 1, i + 1] = t_next
    state.T = T
    if t_next <= BREAKDOWN_TOL * np.linalg.norm(T):
        T[i + 1, i + 1] = 0.0
        state.breakdown = True
        logger.warning(f"Обрыв GKB (Aᵀu) на шаге {i + 1}")
    else:
        state.V.append(w / t_next)
    return state
