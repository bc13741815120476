import numpy as np

from app.data_sources.synthetic import generate_synthetic
from app.schemas.data import Split, SyntheticSpec


def test_shapes_and_class_balance():
    data = generate_synthetic(SyntheticSpec(num_classes=3, n_per_class=10, d1=5, d2=4))
    assert data.x.shape == (30, 5) and data.y.shape == (30, 4)
    np.testing.assert_array_equal(data.class_counts(), [10, 10, 10])
    assert data.indices(Split.TRAIN).size == 21


def test_same_seed_is_identical():
    spec = SyntheticSpec(num_classes=2, n_per_class=8, d1=3, d2=3, seed=5, pair_noise=0.25)
    a, b = generate_synthetic(spec), generate_synthetic(spec)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.splits, b.splits)


def test_different_seeds_differ():
    a = generate_synthetic(SyntheticSpec(num_classes=2, n_per_class=4, d1=3, d2=3, seed=1))
    b = generate_synthetic(SyntheticSpec(num_classes=2, n_per_class=4, d1=3, d2=3, seed=2))
    assert not np.array_equal(a.x, b.x)


def test_samples_cluster_near_their_class():
    data = generate_synthetic(SyntheticSpec(num_classes=4, n_per_class=25, d1=16, d2=8, cluster_spread=0.05))
    means = np.stack([data.x[data.labels == c].mean(axis=0) for c in range(4)])
    nearest = np.argmin(((data.x[:, None, :] - means[None]) ** 2).sum(axis=2), axis=1)
    np.testing.assert_array_equal(nearest, data.labels)


def test_nearest_centroid_separates_classes_at_default_spread():
    data = generate_synthetic(SyntheticSpec(num_classes=10, n_per_class=50, d1=64, d2=48, cluster_spread=0.15, seed=7))
    for features in (data.x, data.y):
        means = np.stack([features[data.labels == c].mean(axis=0) for c in range(10)])
        nearest = np.argmin(((features[:, None, :] - means[None]) ** 2).sum(axis=2), axis=1)
        assert np.mean(nearest == data.labels) >= 0.99
