"""
유한 차분 gradient check

작은 무작위 모델에서 손실별 해석적 그래디언트를 모든 파라미터 원소의 중앙 차분과 비교합니다.
원소 오차는 |a - n| / max(|a|, |n|, GRAD_FLOOR) 이고, 텐서마다 최댓값이 허용치 이하여야 합니다.

원소 하나를 +-h 로 흔든 forward 두 번에서 검사 대상 손실 9개 값을 모두 얻습니다.
두 forward의 ReLU 활성 패턴이 다르면 그 원소는 꺾인 점을 넘은 것이므로 비교에서 빼고 kinks로 셉니다.
"""

from typing import Optional

import numpy as np
from loguru import logger

from app.config import settings
from app.data_sources.dataset import Batch
from app.domain.losses import combined_loss, combined_value
from app.domain.model import FLOW, ActivationBundle, DstcModel, ModelGrads, forward_all
from app.domain.nn_layers import Mode, ReLULayer, init_mlp
from app.schemas.results import GradCheckEntry, GradCheckReport, LossBreakdown
from app.schemas.training import LossWeights, PointwiseMetric, Subnet

# |a|, |n| 모두 이보다 작은 원소는 절대 오차 tolerance * GRAD_FLOOR 로 비교
GRAD_FLOOR = 1e-3

EUC = PointwiseMetric.EUCLIDEAN
COS = PointwiseMetric.COSINE

# 검사 대상 손실: 한 항만 켠 가중치 + 전체 결합
CHECKED_LOSSES: dict[str, LossWeights] = {
    "ce": LossWeights.zeros(),
    "dstc": LossWeights(alpha=0, beta=1, gamma=0, delta=0, ce_weight=0),
    "cdstc": LossWeights(alpha=0, beta=0, gamma=0, delta=1, ce_weight=0),
    "pc_euc": LossWeights(alpha=1, beta=0, gamma=0, delta=0, ce_weight=0, pointwise_metric=EUC),
    "pc_cos": LossWeights(alpha=1, beta=0, gamma=0, delta=0, ce_weight=0, pointwise_metric=COS),
    "cpc_euc": LossWeights(alpha=0, beta=0, gamma=1, delta=0, ce_weight=0, pointwise_metric=EUC),
    "cpc_cos": LossWeights(alpha=0, beta=0, gamma=1, delta=0, ce_weight=0, pointwise_metric=COS),
    "combined_euc": LossWeights(pointwise_metric=EUC),
    "combined_cos": LossWeights(pointwise_metric=COS),
}

_log = logger.bind(component="GradCheck")


def tiny_model(dims: int, num_classes: int, seed: int) -> DstcModel:
    """모든 폭이 dims인 작은 모델 (인코더/번역기 은닉층에 BatchNorm)"""
    return DstcModel(
        e_x=init_mlp([dims, dims, dims], True, seed=seed),
        e_y=init_mlp([dims, dims, dims], True, seed=seed + 1),
        c_x=init_mlp([dims, num_classes], seed=seed + 2),
        c_y=init_mlp([dims, num_classes], seed=seed + 3),
        t_xy=init_mlp([dims, dims, dims], True, seed=seed + 4),
        t_yx=init_mlp([dims, dims, dims], True, seed=seed + 5),
    )


def tiny_batch(dims: int, batch: int, num_classes: int, rng: np.random.Generator) -> Batch:
    return Batch(
        x=rng.standard_normal((batch, dims)),
        y=rng.standard_normal((batch, dims)),
        labels=rng.integers(0, num_classes, size=batch),
        num_classes=num_classes,
    )


def weighted_total(weights: LossWeights, breakdown: LossBreakdown) -> float:
    return (
        weights.ce_weight * breakdown.ce
        + weights.alpha * breakdown.pc
        + weights.beta * breakdown.dstc
        + weights.gamma * breakdown.cpc
        + weights.delta * breakdown.cdstc
    )


def relu_pattern(model: DstcModel, bundle: ActivationBundle) -> bytes:
    """forward 한 번의 모든 ReLU 활성 여부"""
    parts = []
    for name, cache in bundle.caches.items():
        net = model.subnet(FLOW[name][0])
        for layer, entry in zip(net.layers, cache.entries):
            if isinstance(layer, ReLULayer):
                parts.append(np.packbits(entry > 0).tobytes())
    return b"".join(parts)


def loss_values(model: DstcModel, batch: Batch) -> tuple[dict[str, float], bytes]:
    """
    train 모드 forward 한 번으로 CHECKED_LOSSES 전부의 값을 계산합니다.

    Returns:
        (손실 이름 -> 값, ReLU 활성 패턴)
    """
    bundle = forward_all(model, batch, mode=Mode.TRAIN)
    parts = {
        metric: combined_value(model, batch, LossWeights(pointwise_metric=metric), bundle=bundle)
        for metric in (EUC, COS)
    }
    values = {name: weighted_total(w, parts[w.pointwise_metric]) for name, w in CHECKED_LOSSES.items()}
    return values, relu_pattern(model, bundle)


def numeric_gradients(
    model: DstcModel,
    batch: Batch,
    subnet: Subnet,
    key: str,
    step: float,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """
    파라미터 텐서 하나의 모든 원소에 대한 중앙 차분 그래디언트

    Returns:
        (손실 이름 -> 텐서와 같은 모양의 그래디언트, ReLU 경계를 넘은 원소 마스크)
    """
    param = model.subnet(subnet).parameters()[key]
    flat = param.reshape(-1)
    out = {name: np.empty(flat.size) for name in CHECKED_LOSSES}
    kinks = np.zeros(flat.size, dtype=bool)

    for idx in range(flat.size):
        original = flat[idx]
        flat[idx] = original + step
        plus, plus_pattern = loss_values(model, batch)
        flat[idx] = original - step
        minus, minus_pattern = loss_values(model, batch)
        flat[idx] = original
        kinks[idx] = plus_pattern != minus_pattern
        for name in out:
            out[name][idx] = (plus[name] - minus[name]) / (2 * step)

    return {name: g.reshape(param.shape) for name, g in out.items()}, kinks.reshape(param.shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """원소별 |a - n| / max(|a|, |n|, GRAD_FLOOR) 의 최댓값 (빈 입력은 0)"""
    analytic, numeric = np.asarray(analytic, dtype=np.float64), np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), GRAD_FLOOR)
    return float(np.max(np.abs(analytic - numeric) / scale))


def _corrupt(grads: ModelGrads) -> None:
    """하네스 점검용: 그래디언트 하나를 일부러 틀리게 만듭니다."""
    target = grads[Subnet.E_X]
    key = next(iter(target))
    target[key] = target[key] * 1.5 + 1e-2


def run_gradcheck(
    dims: int = 8,
    batch: int = 4,
    trials: int = 20,
    seed: int = 0,
    num_classes: int = 4,
    perturb_bug: bool = False,
    step: Optional[float] = None,
    tolerance: Optional[float] = None,
) -> GradCheckReport:
    """
    모든 손실 x 모든 서브네트워크 파라미터 텐서의 모든 원소에 대해 gradient check 실행

    Args:
        dims: 모든 레이어 폭
        batch: 배치 크기 (BatchNorm 학습 모드 때문에 2 이상)
        trials: 무작위 모델 수
        seed: 모델/배치 시드
        num_classes: 클래스 수
        perturb_bug: True면 trial 0의 첫 손실(ce) 해석적 그래디언트를 일부러 오염
        step: 중앙 차분 간격 (기본 settings.GRADCHECK_STEP)
        tolerance: 허용 상대 오차 (기본 settings.GRADCHECK_TOLERANCE)

    Returns:
        GradCheckReport (손실 x 텐서마다 1개 항목, 등록 순서는 trial -> subnet -> param -> loss)
    """
    step = settings.GRADCHECK_STEP if step is None else step
    tolerance = settings.GRADCHECK_TOLERANCE if tolerance is None else tolerance
    if dims < 1 or batch < 2 or trials < 1:
        raise ValueError(f"gradcheck 인자 오류: dims={dims}, batch={batch}, trials={trials}")

    report = GradCheckReport(dims=dims, batch=batch, trials=trials, tolerance=tolerance)
    rng = np.random.default_rng(seed)

    for trial in range(trials):
        model = tiny_model(dims, num_classes, seed=seed * 100 + trial * 10)
        data = tiny_batch(dims, batch, num_classes, rng)

        analytic = {name: combined_loss(model, data, weights)[1] for name, weights in CHECKED_LOSSES.items()}
        if perturb_bug and trial == 0:
            _corrupt(analytic["ce"])

        for subnet, tensors in model.parameters().items():
            for key in tensors:
                numeric, kinks = numeric_gradients(model, data, subnet, key, step)
                keep = ~kinks
                for loss_name in CHECKED_LOSSES:
                    error = relative_error(analytic[loss_name][subnet][key][keep], numeric[loss_name][keep])
                    report.entries.append(GradCheckEntry(
                        trial=trial,
                        loss=loss_name,
                        subnet=subnet.value,
                        param=key,
                        rel_error=error,
                        passed=error <= tolerance,
                        compared=int(keep.sum()),
                        kinks=int(kinks.sum()),
                    ))

    if report.kinks:
        _log.warning(f"ReLU 경계를 넘은 원소 {report.kinks}개는 비교에서 제외했습니다.")
    if report.passed:
        _log.info(
            f"Gradcheck passed: {len(report.entries)} tensors, {report.compared} entries, "
            f"max rel err {report.max_rel_error:.2e}"
        )
    else:
        _log.warning(f"Gradcheck failed: {len(report.failures)}/{len(report.entries)} tensors")
    return report
