"""
2단계 학습

1단계: 번역기 고정, CE만으로 인코더 + 분류기 학습
2단계: 분류기 고정, 결합 손실로 인코더 + 번역기 학습

배치는 클래스 역빈도 가중 샘플러로 뽑고, 에폭마다 val split으로
두 방향 x 두 거리 mAP와 4개 경로 분류 정확도를 기록합니다.
"""

import copy
import math
from typing import Optional

import numpy as np
from loguru import logger

from app.data_sources.dataset import PairedDataset
from app.data_sources.sampler import WeightedBatchSampler
from app.domain.errors import DimensionMismatchError, NonFiniteGradientError, NonFiniteLossError
from app.domain.losses import combined_loss
from app.domain.model import DstcModel, build_model, embed, model_checksums
from app.domain.optim import AdamState, adam_step
from app.domain.retrieval import classification_accuracy, evaluate_values
from app.schemas.architecture import ArchPreset
from app.schemas.data import Split
from app.schemas.results import Direction, EpochRecord, StepRecord, TrainHistory
from app.schemas.training import LossWeights, PointwiseMetric, StageConfig, Subnet, TrainConfig, TrainMask

_log = logger.bind(component="Trainer")


def validate(model: DstcModel, data: PairedDataset, stage: int, epoch: int) -> EpochRecord:
    """val split 평가 (eval 모드 forward 1회)"""
    val = data.subset(Split.VAL)
    values = embed(model, val.batch()).values

    maps = {}
    for metric in (PointwiseMetric.COSINE, PointwiseMetric.EUCLIDEAN):
        for direction in (Direction.X2Y, Direction.Y2X):
            maps[(metric, direction)] = evaluate_values(values, val.labels, direction, metric).global_map

    accuracy = {path: classification_accuracy(model, val, Split.VAL, path, values=values) for path in ("x", "y", "x2y", "y2x")}

    return EpochRecord(
        stage=stage,
        epoch=epoch,
        val_map_x2y=maps[(PointwiseMetric.COSINE, Direction.X2Y)],
        val_map_y2x=maps[(PointwiseMetric.COSINE, Direction.Y2X)],
        val_map_x2y_euc=maps[(PointwiseMetric.EUCLIDEAN, Direction.X2Y)],
        val_map_y2x_euc=maps[(PointwiseMetric.EUCLIDEAN, Direction.Y2X)],
        val_acc_x=accuracy["x"],
        val_acc_y=accuracy["y"],
        val_acc_xy=accuracy["x2y"],
        val_acc_yx=accuracy["y2x"],
    )


def _frozen_checksums(model: DstcModel, mask: TrainMask) -> dict[Subnet, str]:
    sums = model_checksums(model)
    return {s: h for s, h in sums.items() if not mask.is_trainable(s)}


def _run_stage(
    model: DstcModel,
    data: PairedDataset,
    stage: int,
    stage_cfg: StageConfig,
    weights: LossWeights,
    mask: TrainMask,
    config: TrainConfig,
    early_stop: bool,
) -> tuple[DstcModel, TrainHistory]:
    if data.d1 != model.d1 or data.d2 != model.d2 or data.num_classes != model.num_classes:
        raise DimensionMismatchError(
            "train", (data.d1, data.d2, data.num_classes), (model.d1, model.d2, model.num_classes)
        )

    train_idx = data.indices(Split.TRAIN)
    has_val = data.indices(Split.VAL).size > 0
    if not has_val and early_stop:
        _log.warning("val split이 비어 있어 조기 종료와 에폭별 검증을 생략합니다.")
        early_stop = False

    rng = np.random.default_rng([config.seed, stage])
    sampler = WeightedBatchSampler(data.labels[train_idx], data.num_classes, stage_cfg.batch_size, rng)
    state = AdamState()
    frozen_before = _frozen_checksums(model, mask)

    history = TrainHistory()
    best_score, best_model, since_best = -math.inf, None, 0
    step = 0

    _log.info(
        f"Stage {stage} 시작: epochs={stage_cfg.epochs}, lr={stage_cfg.lr}, batch={stage_cfg.batch_size}, "
        f"batches/epoch={sampler.batches_per_epoch}, weights=({weights.alpha}, {weights.beta}, "
        f"{weights.gamma}, {weights.delta}, ce={weights.ce_weight}, {weights.pointwise_metric.short})"
    )

    for epoch in range(1, stage_cfg.epochs + 1):
        for picks in sampler.epoch():
            step += 1
            batch = data.batch(train_idx[picks])
            breakdown, grads = combined_loss(model, batch, weights, stats_mask=mask)
            if not math.isfinite(breakdown.total):
                raise NonFiniteLossError(
                    f"stage {stage} epoch {epoch} step {step}: 손실이 유한하지 않습니다 ({breakdown.model_dump()})"
                )
            try:
                adam_step(model.parameters(), grads, state, stage_cfg.lr, mask, clip_norm=config.grad_clip)
            except NonFiniteGradientError as e:
                raise NonFiniteGradientError(f"stage {stage} epoch {epoch} step {step}: {e}") from e

            history.steps.append(StepRecord(stage=stage, epoch=epoch, step=step, **breakdown.model_dump()))
            _log.debug(f"[stage {stage}] epoch {epoch} step {step} total={breakdown.total:.6f}")

        if not has_val:
            continue

        record = validate(model, data, stage, epoch)
        history.epochs.append(record)
        _log.info(
            f"[stage {stage}] epoch {epoch}/{stage_cfg.epochs} "
            f"loss={history.steps[-1].total:.4f} val mAP(cos) x2y={record.val_map_x2y:.4f} "
            f"y2x={record.val_map_y2x:.4f} acc x={record.val_acc_x:.3f} y={record.val_acc_y:.3f}"
        )

        if early_stop:
            if record.val_map_both > best_score:
                best_score, best_model, since_best = record.val_map_both, copy.deepcopy(model), 0
                history.best_epoch = epoch
            else:
                since_best += 1
                if since_best >= config.patience:
                    _log.warning(
                        f"[stage {stage}] 조기 종료: {config.patience} 에폭 동안 개선 없음 (best epoch {history.best_epoch})"
                    )
                    break

    if best_model is not None:
        model = best_model

    frozen_after = _frozen_checksums(model, mask)
    if frozen_after != frozen_before:
        changed = sorted(s.value for s in frozen_before if frozen_before[s] != frozen_after.get(s))
        raise RuntimeError(f"stage {stage}: 고정된 서브네트워크가 변경되었습니다: {changed}")
    for subnet, digest in model_checksums(model).items():
        _log.debug(f"[stage {stage}] {subnet.value} sha256={digest[:16]}")

    return model, history


def train_stage1(model: DstcModel, data: PairedDataset, config: TrainConfig) -> tuple[DstcModel, TrainHistory]:
    """번역기를 고정하고 CE(가중치 0)로 인코더 + 분류기 학습"""
    weights = LossWeights.zeros(config.stage2.weights.pointwise_metric)
    return _run_stage(model, data, 1, config.stage1, weights, TrainMask.stage1(), config, early_stop=False)


def train_stage2(model: DstcModel, data: PairedDataset, config: TrainConfig) -> tuple[DstcModel, TrainHistory]:
    """분류기를 고정하고 결합 손실로 인코더 + 번역기 학습"""
    return _run_stage(
        model, data, 2, config.stage2, config.stage2.weights, TrainMask.stage2(), config,
        early_stop=config.early_stop,
    )


def train(
    config: TrainConfig,
    data: PairedDataset,
    preset: Optional[ArchPreset] = None,
    model: Optional[DstcModel] = None,
) -> tuple[DstcModel, TrainHistory]:
    """
    1단계 후 2단계 학습

    조기 종료가 켜져 있으면 2단계의 val mAP(both, cosine) 최고 체크포인트를 반환합니다.
    """
    if model is None:
        model = build_model(preset or ArchPreset(), data.num_classes, data.d1, data.d2, config.seed)

    history = TrainHistory()
    if config.skip_stage1:
        _log.info("1단계 생략 (skip_stage1)")
    else:
        model, stage1 = train_stage1(model, data, config)
        history = history.extend(stage1)

    model, stage2 = train_stage2(model, data, config)
    return model, history.extend(stage2)
