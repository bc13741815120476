import numpy as np
import pytest

from app.data_sources.dataset import PairedDataset, stratified_split
from app.domain.errors import DimensionMismatchError, EmptySplitError, InvalidLabelError
from app.schemas.data import Split


def small(n: int = 6, **kw) -> PairedDataset:
    rng = np.random.default_rng(0)
    return PairedDataset(
        x=rng.standard_normal((n, 3)),
        y=rng.standard_normal((n, 2)),
        labels=np.arange(n) % 2,
        num_classes=2,
        **kw,
    )


def test_defaults_to_all_train():
    data = small()
    assert (data.n, data.d1, data.d2) == (6, 3, 2)
    assert data.indices(Split.TRAIN).size == 6
    np.testing.assert_array_equal(data.class_counts(), [3, 3])


def test_arrays_are_read_only():
    data = small()
    with pytest.raises(ValueError):
        data.x[0, 0] = 1.0


def test_row_count_mismatch():
    with pytest.raises(DimensionMismatchError):
        PairedDataset(x=np.zeros((3, 2)), y=np.zeros((2, 2)), labels=np.zeros(3, dtype=int), num_classes=1)


def test_label_out_of_range():
    with pytest.raises(InvalidLabelError):
        PairedDataset(x=np.zeros((2, 2)), y=np.zeros((2, 2)), labels=np.array([0, 2]), num_classes=2)


def test_non_finite_features():
    with pytest.raises(ValueError):
        PairedDataset(x=np.array([[np.nan]]), y=np.zeros((1, 1)), labels=np.zeros(1, dtype=int), num_classes=1)


def test_subset_by_split():
    data = small(splits=np.array([0, 0, 1, 1, 2, 2], dtype=np.uint8))
    val = data.subset(Split.VAL)
    assert val.n == 2
    np.testing.assert_array_equal(val.labels, [0, 1])


def test_empty_subset():
    with pytest.raises(EmptySplitError):
        small().subset(Split.TEST)


def test_batch_one_hot():
    batch = small().batch(np.array([1, 2]))
    np.testing.assert_array_equal(batch.one_hot, [[0, 1], [1, 0]])


def test_stratified_split_counts():
    labels = np.repeat(np.arange(3), 20)
    splits = stratified_split(labels, 3, np.random.default_rng(0))
    for c in range(3):
        per_class = splits[labels == c]
        assert [(per_class == s).sum() for s in Split] == [14, 3, 3]


def test_resplit_is_seeded():
    data = small(n=40)
    np.testing.assert_array_equal(data.resplit(1).splits, data.resplit(1).splits)
    assert not np.array_equal(data.resplit(1).splits, data.resplit(2).splits)


def test_invalid_fractions():
    with pytest.raises(ValueError):
        stratified_split(np.zeros(4, dtype=int), 1, np.random.default_rng(0), (0.5, 0.5, 0.5))
