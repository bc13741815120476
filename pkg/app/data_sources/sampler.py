"""
클래스 불균형 대응 가중 샘플러
샘플 가중치 = 1 / (해당 클래스 샘플 수) 로 두어 클래스별 기대 질량을 같게 만듭니다.
"""

from typing import Iterator

import numpy as np
from numpy.typing import NDArray

from app.domain.errors import InvalidLabelError


def sampler_weights(labels: NDArray[np.int64], num_classes: int) -> NDArray[np.float64]:
    """
    역빈도 샘플 가중치

    Args:
        labels: 클래스 인덱스 (비어 있으면 안 됨)
        num_classes: 클래스 수 C

    Returns:
        샘플별 가중치 (샘플이 없는 클래스는 기여하지 않음)
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise InvalidLabelError("레이블이 비어 있습니다.")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise InvalidLabelError(f"레이블이 [0, {num_classes}) 범위를 벗어났습니다.")

    counts = np.bincount(labels, minlength=num_classes)
    return 1.0 / counts[labels]


def sample_batch(
    weights: NDArray[np.float64],
    batch_size: int,
    rng: np.random.Generator,
) -> NDArray[np.int64]:
    """
    가중치에 비례한 복원 추출로 batch_size개 인덱스를 뽑습니다.

    Args:
        weights: 샘플별 0 이상 가중치 (합이 1일 필요 없음)
        batch_size: 뽑을 인덱스 수
        rng: 호출 쪽이 소유한 Generator

    Raises:
        ValueError: batch_size < 1, 음수/NaN 가중치, 가중치 합 0
    """
    weights = np.asarray(weights, dtype=np.float64)
    if batch_size < 1:
        raise ValueError(f"batch_size는 1 이상이어야 합니다: {batch_size}")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("가중치는 유한한 0 이상의 값이어야 합니다.")
    total = weights.sum()
    if total <= 0:
        raise ValueError("가중치가 모두 0입니다.")
    return rng.choice(weights.size, size=batch_size, replace=True, p=weights / total)


class WeightedBatchSampler:
    """
    에폭 단위 가중 배치 샘플러

    한 에폭 = max(1, N // batch_size) 배치, 배치마다 독립 복원 추출
    """

    def __init__(
        self,
        labels: NDArray[np.int64],
        num_classes: int,
        batch_size: int,
        rng: np.random.Generator,
    ):
        self.weights = sampler_weights(labels, num_classes)
        self.batch_size = batch_size
        self.rng = rng

    @property
    def batches_per_epoch(self) -> int:
        return max(1, self.weights.size // self.batch_size)

    def epoch(self) -> Iterator[NDArray[np.int64]]:
        for _ in range(self.batches_per_epoch):
            yield sample_batch(self.weights, self.batch_size, self.rng)
