"""
행렬 연산 커널
모든 배치 데이터(행 = 샘플)는 float64 2차원 numpy 배열로 다룹니다.
"""

from typing import Callable, Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.config import settings
from app.domain.errors import DimensionMismatchError

DenseMatrix = NDArray[np.float64]

ElementwiseOp = Literal["add", "sub", "mul", "div"]

_ELEMENTWISE: dict[str, Callable] = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
}


def as_matrix(values: ArrayLike, name: str = "matrix") -> DenseMatrix:
    """
    입력을 float64 2차원 배열로 변환합니다.

    1차원 입력은 한 행짜리 행렬로 취급합니다.
    """
    m = np.asarray(values, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionMismatchError(f"as_matrix({name})", m.shape)
    return m


def matmul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    """
    행렬 곱

    Args:
        a: m x k 행렬
        b: k x n 행렬

    Returns:
        m x n 행렬

    Raises:
        DimensionMismatchError: 2차원이 아니거나 a.cols != b.rows
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionMismatchError("matmul", a.shape, b.shape)
    return a @ b


def row_norms(m: DenseMatrix) -> NDArray[np.float64]:
    """행별 l2 노름 (shape: rows x 1)"""
    return np.sqrt(np.sum(m * m, axis=1, keepdims=True))


def l2_normalize_rows(m: DenseMatrix, eps: float | None = None) -> DenseMatrix:
    """
    각 행을 max(노름, eps)로 나눕니다.

    노름이 eps보다 큰 행은 단위 노름이 되고, 0 행은 그대로 0입니다.
    """
    eps = settings.NORMALIZE_EPS if eps is None else eps
    if eps <= 0:
        raise ValueError(f"eps는 양수여야 합니다: {eps}")
    return m / np.maximum(row_norms(m), eps)


def l2_normalize_rows_backward(
    m: DenseMatrix,
    grad_output: DenseMatrix,
    eps: float | None = None,
) -> DenseMatrix:
    """
    l2_normalize_rows의 입력 그래디언트

    노름 > eps 인 행: (g - u * <g, u>) / ||m||, u = m / ||m||
    노름 <= eps 인 행: g / eps (분모가 상수)
    """
    eps = settings.NORMALIZE_EPS if eps is None else eps
    if m.shape != grad_output.shape:
        raise DimensionMismatchError("l2_normalize_rows_backward", m.shape, grad_output.shape)
    norms = row_norms(m)
    denom = np.maximum(norms, eps)
    unit = m / denom
    projection = np.sum(grad_output * unit, axis=1, keepdims=True)
    active = norms > eps
    return np.where(active, (grad_output - unit * projection) / denom, grad_output / denom)


def elementwise(
    op: ElementwiseOp,
    a: DenseMatrix,
    b: Union[DenseMatrix, float],
    eps: float | None = None,
) -> DenseMatrix:
    """
    원소별 연산 (add/sub/mul/div)

    b가 스칼라면 브로드캐스트합니다.
    div에서 eps가 주어지면 |b| < eps 인 분모를 부호를 유지한 eps로 바꿉니다.
    """
    if op not in _ELEMENTWISE:
        raise ValueError(f"지원하지 않는 연산: {op}")
    if not np.isscalar(b):
        b = np.asarray(b, dtype=np.float64)
        if b.shape != a.shape:
            raise DimensionMismatchError(f"elementwise[{op}]", a.shape, b.shape)
    if op == "div" and eps is not None:
        b = np.where(np.abs(b) < eps, np.copysign(eps, b), b)
    return _ELEMENTWISE[op](a, b).astype(np.float64, copy=False)


def squared_distances(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    """모든 행 쌍의 제곱 유클리드 거리 (a.rows x b.rows)"""
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError("squared_distances", a.shape, b.shape)
    diff = a[:, None, :] - b[None, :, :]
    return np.sum(diff * diff, axis=2)
