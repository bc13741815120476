"""
손실 함수

다섯 손실 항(CE, PC, DSTC, cPC, cDSTC)과 가중합.
각 항은 (값, 활성값 그래디언트)를 계산한 뒤 backward_all로 파라미터 그래디언트를 구합니다.

    CE    = CE(C_x(ex), c) + CE(C_y(ey), c)
    DSTC  = CE(C_y(txy), c) + CE(C_x(tyx), c)
    cDSTC = CE(C_x(rtx), c) + CE(C_y(rty), c)
    PC    = (1/N) sum ||ex - tyx||^2 + ||ey - txy||^2
    cPC   = (1/N) sum ||ex - rtx||^2 + ||ey - rty||^2
"""

from typing import Callable, Optional

import numpy as np

from app.data_sources.dataset import Batch
from app.domain.errors import DimensionMismatchError, InvalidLabelError
from app.domain.model import ActivationBundle, DstcModel, ModelGrads, backward_all, forward_all
from app.domain.nn_layers import Mode
from app.domain.tensor_core import DenseMatrix, l2_normalize_rows, l2_normalize_rows_backward
from app.schemas.results import LossBreakdown
from app.schemas.training import LossWeights, PointwiseMetric, TrainMask

ActivationGrads = dict[str, DenseMatrix]

# 손실 항별 (logits 이름 쌍) / (임베딩 쌍)
CE_PATHS = ("logits_x", "logits_y")
DSTC_PATHS = ("logits_xy", "logits_yx")
CDSTC_PATHS = ("logits_xyx", "logits_yxy")
PC_PAIRS = (("ex", "tyx"), ("ey", "txy"))
CPC_PAIRS = (("ex", "rtx"), ("ey", "rty"))


def _check_one_hot(labels: DenseMatrix) -> None:
    is_binary = np.all((labels == 0.0) | (labels == 1.0))
    if not is_binary or not np.all(labels.sum(axis=1) == 1.0):
        raise InvalidLabelError("레이블 행이 one-hot이 아닙니다.")


def softmax_cross_entropy(logits: DenseMatrix, labels: DenseMatrix) -> tuple[float, DenseMatrix]:
    """
    평균 softmax 교차 엔트로피

    Returns:
        (loss, d loss / d logits = (softmax - labels) / N)
    """
    if logits.shape != labels.shape or logits.ndim != 2:
        raise DimensionMismatchError("softmax_cross_entropy", logits.shape, labels.shape)
    _check_one_hot(labels)

    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    loss = float(-np.sum(labels * log_probs) / n)
    grad = (np.exp(log_probs) - labels) / n
    return loss, grad


def _ce_terms(bundle: ActivationBundle, labels: DenseMatrix, paths: tuple[str, ...]) -> tuple[float, ActivationGrads]:
    value = 0.0
    grads: ActivationGrads = {}
    for name in paths:
        loss, grad = softmax_cross_entropy(bundle.values[name], labels)
        value += loss
        grads[name] = grad
    return value, grads


def _pointwise_terms(
    bundle: ActivationBundle,
    pairs: tuple[tuple[str, str], ...],
    metric: PointwiseMetric,
) -> tuple[float, ActivationGrads]:
    value = 0.0
    grads: ActivationGrads = {}
    for a_name, b_name in pairs:
        a, b = bundle.values[a_name], bundle.values[b_name]
        if a.shape != b.shape:
            raise DimensionMismatchError("pointwise loss", a.shape, b.shape)
        n = a.shape[0]

        if metric == PointwiseMetric.COSINE:
            ua, ub = l2_normalize_rows(a), l2_normalize_rows(b)
            diff = ua - ub
            grad_a = l2_normalize_rows_backward(a, 2.0 * diff / n)
            grad_b = l2_normalize_rows_backward(b, -2.0 * diff / n)
        else:
            diff = a - b
            grad_a = 2.0 * diff / n
            grad_b = -grad_a

        value += float(np.sum(diff * diff) / n)
        _accumulate(grads, {a_name: grad_a, b_name: grad_b})
    return value, grads


def _accumulate(target: ActivationGrads, source: ActivationGrads, scale: float = 1.0) -> None:
    for name, grad in source.items():
        scaled = scale * grad
        target[name] = target[name] + scaled if name in target else scaled


def _bundle(model: DstcModel, batch: Batch, bundle: Optional[ActivationBundle]) -> ActivationBundle:
    return bundle if bundle is not None else forward_all(model, batch, mode=Mode.TRAIN)


def _loss(
    terms: Callable[[ActivationBundle], tuple[float, ActivationGrads]],
    model: DstcModel,
    batch: Batch,
    bundle: Optional[ActivationBundle],
) -> tuple[float, ModelGrads]:
    bundle = _bundle(model, batch, bundle)
    value, act_grads = terms(bundle)
    return value, backward_all(model, bundle, act_grads)


# ==================== 개별 손실 ====================
def loss_ce(model: DstcModel, batch: Batch, bundle: Optional[ActivationBundle] = None) -> tuple[float, ModelGrads]:
    """
    단일 모달 분류 손실: CE(C_x(ex)) + CE(C_y(ey))

    Args:
        model: DSTC 모델
        batch: 학습 배치 (레이블은 one-hot으로 변환)
        bundle: 이미 계산한 train 모드 활성값 (없으면 forward_all 1회)

    Returns:
        (손실 값, 서브네트워크별 파라미터 그래디언트)
    """
    return _loss(lambda b: _ce_terms(b, batch.one_hot, CE_PATHS), model, batch, bundle)


def loss_dstc(model: DstcModel, batch: Batch, bundle: Optional[ActivationBundle] = None) -> tuple[float, ModelGrads]:
    """번역 후에도 클래스가 유지되도록 하는 손실"""
    return _loss(lambda b: _ce_terms(b, batch.one_hot, DSTC_PATHS), model, batch, bundle)


def loss_cdstc(model: DstcModel, batch: Batch, bundle: Optional[ActivationBundle] = None) -> tuple[float, ModelGrads]:
    """왕복 번역 후 클래스 유지 손실"""
    return _loss(lambda b: _ce_terms(b, batch.one_hot, CDSTC_PATHS), model, batch, bundle)


def loss_pc(
    model: DstcModel,
    batch: Batch,
    metric: PointwiseMetric = PointwiseMetric.EUCLIDEAN,
    bundle: Optional[ActivationBundle] = None,
) -> tuple[float, ModelGrads]:
    """
    번역된 표현이 상대 모달 임베딩과 가깝도록 하는 손실

    (||ex - tyx||^2 + ||ey - txy||^2) / N. cosine이면 두 쪽 모두 행 정규화 후 계산합니다.

    Args:
        metric: euclidean 또는 cosine
        bundle: 이미 계산한 train 모드 활성값

    Returns:
        (손실 값, 서브네트워크별 파라미터 그래디언트)
    """
    return _loss(lambda b: _pointwise_terms(b, PC_PAIRS, PointwiseMetric(metric)), model, batch, bundle)


def loss_cpc(
    model: DstcModel,
    batch: Batch,
    metric: PointwiseMetric = PointwiseMetric.EUCLIDEAN,
    bundle: Optional[ActivationBundle] = None,
) -> tuple[float, ModelGrads]:
    """왕복 번역 결과가 원래 임베딩으로 돌아오도록 하는 손실"""
    return _loss(lambda b: _pointwise_terms(b, CPC_PAIRS, PointwiseMetric(metric)), model, batch, bundle)


# ==================== 결합 손실 ====================
def combined_loss(
    model: DstcModel,
    batch: Batch,
    weights: LossWeights,
    bundle: Optional[ActivationBundle] = None,
    stats_mask: Optional[TrainMask] = None,
) -> tuple[LossBreakdown, ModelGrads]:
    """
    가중합 손실

    total = ce_weight * ce + alpha * pc + beta * dstc + gamma * cpc + delta * cdstc
    breakdown의 각 항은 가중치 적용 전 값입니다. 가중치가 0인 항은 그래디언트에서 빠집니다.

    Args:
        stats_mask: 단계의 학습 마스크. 고정된 서브네트워크의 BatchNorm running 통계는 그대로 둠
    """
    if bundle is None:
        bundle = forward_all(model, batch, mode=Mode.TRAIN, stats_mask=stats_mask)

    components = _components(bundle, batch, weights)
    act_grads: ActivationGrads = {}
    for weight, (_, grads) in components.values():
        if weight > 0:
            _accumulate(act_grads, grads, weight)
    return _breakdown(components), backward_all(model, bundle, act_grads)


def combined_value(
    model: DstcModel,
    batch: Batch,
    weights: LossWeights,
    mode: Mode = Mode.TRAIN,
    bundle: Optional[ActivationBundle] = None,
) -> LossBreakdown:
    """backward 없이 손실 값만 계산합니다 (검증, 수치 미분용)."""
    if bundle is None:
        bundle = forward_all(model, batch, mode=mode)
    return _breakdown(_components(bundle, batch, weights))


def _components(
    bundle: ActivationBundle,
    batch: Batch,
    weights: LossWeights,
) -> dict[str, tuple[float, tuple[float, ActivationGrads]]]:
    labels = batch.one_hot
    metric = weights.pointwise_metric
    return {
        "ce": (weights.ce_weight, _ce_terms(bundle, labels, CE_PATHS)),
        "pc": (weights.alpha, _pointwise_terms(bundle, PC_PAIRS, metric)),
        "dstc": (weights.beta, _ce_terms(bundle, labels, DSTC_PATHS)),
        "cpc": (weights.gamma, _pointwise_terms(bundle, CPC_PAIRS, metric)),
        "cdstc": (weights.delta, _ce_terms(bundle, labels, CDSTC_PATHS)),
    }


def _breakdown(components: dict[str, tuple[float, tuple[float, ActivationGrads]]]) -> LossBreakdown:
    total = sum(weight * value for weight, (value, _) in components.values())
    return LossBreakdown(
        **{name: value for name, (_, (value, _)) in components.items()},
        total=total,
    )
