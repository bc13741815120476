"""
Adam 옵티마이저
서브네트워크 단위 학습 마스크로 2단계 고정 일정을 지원합니다.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.config import settings
from app.domain.errors import DimensionMismatchError, NonFiniteGradientError
from app.domain.nn_layers import GradSet
from app.schemas.training import Subnet, TrainMask

ParamTree = dict[Subnet, GradSet]


@dataclass
class AdamState:
    """
    Adam 모멘트 상태

    m, v는 파라미터와 같은 구조로 첫 업데이트 때 만들어집니다.
    고정된 서브네트워크의 모멘트는 건드리지 않습니다.
    """

    beta1: float = field(default_factory=lambda: settings.ADAM_BETA1)
    beta2: float = field(default_factory=lambda: settings.ADAM_BETA2)
    eps: float = field(default_factory=lambda: settings.ADAM_EPS)
    t: int = 0
    m: ParamTree = field(default_factory=dict)
    v: ParamTree = field(default_factory=dict)

    def __post_init__(self):
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name}는 (0, 1) 범위여야 합니다: {value}")
        if self.eps <= 0:
            raise ValueError(f"eps는 양수여야 합니다: {self.eps}")

    def moments(self, subnet: Subnet, key: str, like: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = self.m.setdefault(subnet, {}).setdefault(key, np.zeros_like(like))
        v = self.v.setdefault(subnet, {}).setdefault(key, np.zeros_like(like))
        return m, v


def _check(params: ParamTree, grads: ParamTree, mask: TrainMask) -> None:
    for subnet, tensors in params.items():
        if subnet not in grads:
            raise DimensionMismatchError(f"adam_step: '{subnet.value}' 그래디언트 없음", ())
        for key, value in tensors.items():
            grad = grads[subnet].get(key)
            if grad is None or grad.shape != value.shape:
                raise DimensionMismatchError(
                    f"adam_step {subnet.value}.{key}", value.shape, None if grad is None else grad.shape
                )
            if mask.is_trainable(subnet) and not np.all(np.isfinite(grad)):
                raise NonFiniteGradientError(f"{subnet.value}.{key} 그래디언트에 NaN/Inf가 있습니다.")


def global_grad_norm(grads: ParamTree, mask: TrainMask) -> float:
    """학습 대상 서브네트워크 그래디언트 전체의 l2 노름"""
    total = 0.0
    for subnet, tensors in grads.items():
        if mask.is_trainable(subnet):
            total += sum(float(np.sum(g * g)) for g in tensors.values())
    return float(np.sqrt(total))


def adam_step(
    params: ParamTree,
    grads: ParamTree,
    state: AdamState,
    lr: float,
    mask: TrainMask,
    clip_norm: Optional[float] = None,
) -> tuple[ParamTree, AdamState]:
    """
    Adam 1스텝 (bias correction 포함)

    학습 가능한 서브네트워크의 파라미터만 제자리에서 갱신합니다.
    검증은 모든 갱신 전에 끝나므로 오류 시 파라미터/상태는 그대로입니다.

    Args:
        params: model.parameters() (배열 참조)
        grads: 같은 구조의 그래디언트
        clip_norm: 설정 시 학습 대상 전역 노름을 이 값 이하로 축소

    Raises:
        NonFiniteGradientError: 학습 대상 그래디언트에 NaN/Inf
    """
    if lr <= 0:
        raise ValueError(f"lr은 양수여야 합니다: {lr}")
    _check(params, grads, mask)

    scale = 1.0
    if clip_norm is not None:
        norm = global_grad_norm(grads, mask)
        if norm > clip_norm:
            scale = clip_norm / norm

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t

    for subnet, tensors in params.items():
        if not mask.is_trainable(subnet):
            continue
        for key, value in tensors.items():
            grad = grads[subnet][key] * scale
            m, v = state.moments(subnet, key, value)
            m *= b1
            m += (1.0 - b1) * grad
            v *= b2
            v += (1.0 - b2) * grad * grad
            m_hat = m / correction1
            v_hat = v / correction2
            value -= lr * m_hat / (np.sqrt(v_hat) + state.eps)

    return params, state
