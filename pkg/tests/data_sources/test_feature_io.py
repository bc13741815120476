import numpy as np
import pytest

from app.data_sources.feature_io import (
    HEADER,
    load_dataset,
    load_features,
    load_labels,
    load_manifest,
    save_dataset,
    save_features,
    save_labels,
)
from app.domain.errors import (
    BadMagicError,
    ConfigError,
    FeatureFileError,
    HeaderInconsistencyError,
    TruncatedFileError,
    VersionMismatchError,
)


def test_features_round_trip_as_float32(tmp_path):
    matrix = np.random.default_rng(0).standard_normal((5, 3))
    path = save_features(tmp_path / "x.feat", matrix)
    assert path.stat().st_size == HEADER.size + 5 * 3 * 4
    np.testing.assert_array_equal(load_features(path), matrix.astype(np.float32).astype(np.float64))


def test_labels_round_trip(tmp_path):
    path = save_labels(tmp_path / "l.lbl", np.array([0, 2, 1]), 3)
    labels, num_classes = load_labels(path)
    np.testing.assert_array_equal(labels, [0, 2, 1])
    assert num_classes == 3


def test_bad_magic(tmp_path):
    path = save_features(tmp_path / "x.feat", np.ones((2, 2)))
    raw = bytearray(path.read_bytes())
    raw[:8] = b"NOTAFEAT"
    path.write_bytes(bytes(raw))
    with pytest.raises(BadMagicError):
        load_features(path)


def test_label_file_is_not_a_feature_file(tmp_path):
    path = save_labels(tmp_path / "l.lbl", np.array([0]), 1)
    with pytest.raises(BadMagicError):
        load_features(path)


def test_version_mismatch(tmp_path):
    path = save_features(tmp_path / "x.feat", np.ones((1, 1)))
    raw = bytearray(path.read_bytes())
    raw[8] = 99
    path.write_bytes(bytes(raw))
    with pytest.raises(VersionMismatchError):
        load_features(path)


def test_truncated_payload(tmp_path):
    path = save_features(tmp_path / "x.feat", np.ones((4, 2)))
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(TruncatedFileError):
        load_features(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "x.feat"
    path.write_bytes(b"DSTC")
    with pytest.raises(TruncatedFileError):
        load_features(path)


def test_trailing_bytes(tmp_path):
    path = save_features(tmp_path / "x.feat", np.ones((1, 2)))
    path.write_bytes(path.read_bytes() + b"\x00\x00\x00\x00")
    with pytest.raises(HeaderInconsistencyError):
        load_features(path)


def test_file_errors_are_os_errors(tmp_path):
    path = tmp_path / "x.feat"
    path.write_bytes(b"")
    with pytest.raises(OSError):
        load_features(path)
    assert issubclass(FeatureFileError, OSError)


def test_dataset_round_trip(tmp_path, dataset):
    manifest = save_dataset(dataset, tmp_path / "data")
    loaded = load_dataset(manifest)
    np.testing.assert_allclose(loaded.x, dataset.x, atol=1e-6)
    np.testing.assert_array_equal(loaded.labels, dataset.labels)
    np.testing.assert_array_equal(loaded.splits, dataset.splits)
    assert loaded.num_classes == dataset.num_classes


def test_manifest_paths_resolve_relative_to_file(tmp_path, dataset):
    manifest = save_dataset(dataset, tmp_path / "data")
    assert load_manifest(manifest).x == tmp_path / "data" / "x.feat"


def test_manifest_without_split_is_all_train(tmp_path, dataset):
    manifest = save_dataset(dataset, tmp_path / "data")
    manifest.write_text("x=x.feat\ny=y.feat\nlabels=labels.lbl\n", encoding="utf-8")
    assert load_dataset(manifest).indices(0).size == dataset.n


def test_manifest_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_manifest(tmp_path / "missing")
    bad = tmp_path / "manifest"
    bad.write_text("x=a\nfoo=b\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_manifest(bad)
    bad.write_text("x=a\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_manifest(bad)
