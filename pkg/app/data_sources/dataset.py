"""
쌍 데이터셋
두 모달리티 특징 (x, y), 클래스 레이블, split 태그를 함께 보관합니다.
생성 이후에는 변경하지 않습니다.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from app.domain.errors import DimensionMismatchError, EmptySplitError, InvalidLabelError
from app.domain.tensor_core import DenseMatrix
from app.schemas.data import Split

SPLIT_FRACTIONS = (0.7, 0.15, 0.15)


def one_hot(labels: NDArray[np.int64], num_classes: int) -> DenseMatrix:
    """클래스 인덱스 -> one-hot 행렬"""
    out = np.zeros((labels.shape[0], num_classes), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Batch:
    """학습/평가에 쓰이는 미니배치"""

    x: DenseMatrix
    y: DenseMatrix
    labels: NDArray[np.int64]
    num_classes: int

    def __post_init__(self):
        if self.x.shape[0] != self.y.shape[0] or self.x.shape[0] != self.labels.shape[0]:
            raise DimensionMismatchError("Batch", self.x.shape, self.y.shape, self.labels.shape)

    @property
    def size(self) -> int:
        return self.x.shape[0]

    @property
    def one_hot(self) -> DenseMatrix:
        return one_hot(self.labels, self.num_classes)


@dataclass(frozen=True, eq=False)
class PairedDataset:
    """
    쌍 데이터셋

    x: N x d1, y: N x d2, labels: N (0 <= label < C), splits: N (Split 값)
    """

    x: DenseMatrix
    y: DenseMatrix
    labels: NDArray[np.int64]
    num_classes: int
    splits: Optional[NDArray[np.uint8]] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        n = labels.shape[0]

        if x.ndim != 2 or y.ndim != 2 or labels.ndim != 1 or x.shape[0] != n or y.shape[0] != n:
            raise DimensionMismatchError("PairedDataset", x.shape, y.shape, labels.shape)
        if self.num_classes < 1:
            raise InvalidLabelError(f"클래스 수는 1 이상이어야 합니다: {self.num_classes}")
        if n and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise InvalidLabelError(f"레이블이 [0, {self.num_classes}) 범위를 벗어났습니다.")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("특징에 NaN/Inf가 있습니다.")

        if self.splits is None:
            splits = np.full(n, Split.TRAIN, dtype=np.uint8)
        else:
            splits = np.asarray(self.splits, dtype=np.uint8)
            if splits.shape != (n,):
                raise DimensionMismatchError("PairedDataset.splits", splits.shape, (n,))
            if np.any(splits > Split.TEST):
                raise ValueError("split 값은 0(train), 1(val), 2(test) 중 하나여야 합니다.")

        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "labels", _readonly(labels))
        object.__setattr__(self, "splits", _readonly(splits))

    # === 형상 ===
    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def d1(self) -> int:
        return self.x.shape[1]

    @property
    def d2(self) -> int:
        return self.y.shape[1]

    def one_hot(self, indices: Optional[NDArray[np.int64]] = None) -> DenseMatrix:
        labels = self.labels if indices is None else self.labels[indices]
        return one_hot(labels, self.num_classes)

    def class_counts(self, split: Optional[Split] = None) -> NDArray[np.int64]:
        labels = self.labels if split is None else self.labels[self.indices(split)]
        return np.bincount(labels, minlength=self.num_classes)

    # === split ===
    def indices(self, split: Split) -> NDArray[np.int64]:
        return np.flatnonzero(self.splits == Split(split))

    def subset(self, selector: Union[Split, Sequence[int], NDArray[np.int64]]) -> "PairedDataset":
        """split 또는 인덱스 목록으로 부분 데이터셋 생성"""
        if isinstance(selector, Split):
            idx = self.indices(selector)
        else:
            idx = np.asarray(selector, dtype=np.int64)
        if idx.size == 0:
            raise EmptySplitError(f"빈 부분 데이터셋: {selector}")
        return PairedDataset(
            x=self.x[idx],
            y=self.y[idx],
            labels=self.labels[idx],
            num_classes=self.num_classes,
            splits=self.splits[idx],
        )

    def batch(self, indices: Optional[NDArray[np.int64]] = None) -> Batch:
        if indices is None:
            return Batch(x=self.x, y=self.y, labels=self.labels, num_classes=self.num_classes)
        indices = np.asarray(indices, dtype=np.int64)
        return Batch(
            x=self.x[indices],
            y=self.y[indices],
            labels=self.labels[indices],
            num_classes=self.num_classes,
        )

    def resplit(
        self,
        seed: int,
        fractions: tuple[float, float, float] = SPLIT_FRACTIONS,
    ) -> "PairedDataset":
        """클래스 층화 train/val/test split을 새로 뽑은 복사본"""
        splits = stratified_split(self.labels, self.num_classes, np.random.default_rng(seed), fractions)
        return PairedDataset(
            x=self.x, y=self.y, labels=self.labels, num_classes=self.num_classes, splits=splits,
        )


def stratified_split(
    labels: NDArray[np.int64],
    num_classes: int,
    rng: np.random.Generator,
    fractions: tuple[float, float, float] = SPLIT_FRACTIONS,
) -> NDArray[np.uint8]:
    """
    클래스별로 섞은 뒤 train/val/test 비율대로 나눕니다.

    클래스당 train = floor(n * f_train), val = floor(n * f_val), 나머지 test
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions) or not np.isclose(sum(fractions), 1.0):
        raise ValueError(f"split 비율이 올바르지 않습니다: {fractions}")

    splits = np.empty(labels.shape[0], dtype=np.uint8)
    for c in range(num_classes):
        members = rng.permutation(np.flatnonzero(labels == c))
        n_train = int(np.floor(members.size * fractions[0]))
        n_val = int(np.floor(members.size * fractions[1]))
        splits[members[:n_train]] = Split.TRAIN
        splits[members[n_train:n_train + n_val]] = Split.VAL
        splits[members[n_train + n_val:]] = Split.TEST
    return splits
