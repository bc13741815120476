"""
특징/레이블 바이너리 파일 입출력

특징 파일 (little-endian):
    magic "DSTCFEAT" (8 bytes) | u32 version | u32 n | u32 d | n*d float32 (row-major)
레이블 파일:
    magic "DSTCLABL" (8 bytes) | u32 version | u32 n | u32 C | n uint32
split 파일:
    n bytes (0=train, 1=val, 2=test)
매니페스트:
    key=value 텍스트 (x, y, labels, split)
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger
from numpy.typing import NDArray
from pydantic import ValidationError

from app.config import settings
from app.data_sources.dataset import PairedDataset
from app.domain.errors import (
    BadMagicError,
    ConfigError,
    HeaderInconsistencyError,
    TruncatedFileError,
    VersionMismatchError,
)
from app.domain.tensor_core import DenseMatrix, as_matrix
from app.schemas.data import DatasetManifest, Split

FEATURE_MAGIC = b"DSTCFEAT"
LABEL_MAGIC = b"DSTCLABL"
HEADER = struct.Struct("<8sIII")

MANIFEST_NAME = "manifest"
DATASET_FILES = {
    "x": "x.feat",
    "y": "y.feat",
    "labels": "labels.lbl",
    "split": "split.bin",
}

PathLike = Union[str, Path]

_log = logger.bind(source="FeatureIO")


def _read_container(path: PathLike, magic: bytes) -> tuple[int, int, bytes]:
    """헤더를 검증하고 (a, b, payload)를 반환합니다."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        raise TruncatedFileError(path, f"헤더가 잘렸습니다 ({len(raw)} < {HEADER.size} bytes)")

    file_magic, version, a, b = HEADER.unpack_from(raw)
    if file_magic != magic:
        raise BadMagicError(path, f"매직 불일치: {file_magic!r} (기대값 {magic!r})")
    if version != settings.FEATURE_FORMAT_VERSION:
        raise VersionMismatchError(
            path, f"지원하지 않는 버전 {version} (기대값 {settings.FEATURE_FORMAT_VERSION})"
        )
    return a, b, raw[HEADER.size:]


def _check_payload(path: PathLike, payload: bytes, expected: int) -> None:
    if len(payload) < expected:
        raise TruncatedFileError(path, f"페이로드가 잘렸습니다 ({len(payload)} < {expected} bytes)")
    if len(payload) > expected:
        raise HeaderInconsistencyError(
            path, f"헤더 크기와 페이로드가 다릅니다 ({len(payload)} > {expected} bytes)"
        )


# ==================== 특징 ====================
def save_features(path: PathLike, matrix: DenseMatrix) -> Path:
    """float64 행렬을 float32로 잘라 저장합니다."""
    path = Path(path)
    m = as_matrix(matrix, "features")
    n, d = m.shape
    header = HEADER.pack(FEATURE_MAGIC, settings.FEATURE_FORMAT_VERSION, n, d)
    path.write_bytes(header + m.astype("<f4").tobytes(order="C"))
    _log.debug(f"Features saved: {path} ({n}x{d})")
    return path


def load_features(path: PathLike) -> DenseMatrix:
    """
    특징 파일을 읽어 float64 행렬로 반환합니다.

    Raises:
        BadMagicError: 매직 불일치
        VersionMismatchError: 지원하지 않는 포맷 버전
        TruncatedFileError: 헤더가 말한 것보다 짧은 본문
        HeaderInconsistencyError: 본문 뒤에 남는 바이트
    """
    n, d, payload = _read_container(path, FEATURE_MAGIC)
    _check_payload(path, payload, n * d * 4)
    return np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float64)


# ==================== 레이블 ====================
def save_labels(path: PathLike, labels: NDArray[np.int64], num_classes: int) -> Path:
    path = Path(path)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"레이블이 [0, {num_classes}) 범위를 벗어났습니다.")
    header = HEADER.pack(LABEL_MAGIC, settings.FEATURE_FORMAT_VERSION, labels.size, num_classes)
    path.write_bytes(header + labels.astype("<u4").tobytes())
    _log.debug(f"Labels saved: {path} (n={labels.size}, C={num_classes})")
    return path


def load_labels(path: PathLike) -> tuple[NDArray[np.int64], int]:
    """Returns: (레이블, 클래스 수 C)"""
    n, num_classes, payload = _read_container(path, LABEL_MAGIC)
    _check_payload(path, payload, n * 4)
    labels = np.frombuffer(payload, dtype="<u4").astype(np.int64)
    if labels.size and labels.max() >= num_classes:
        raise HeaderInconsistencyError(path, f"레이블 {labels.max()}이(가) C={num_classes} 이상입니다.")
    return labels, num_classes


# ==================== split ====================
def save_splits(path: PathLike, splits: NDArray[np.uint8]) -> Path:
    path = Path(path)
    path.write_bytes(np.asarray(splits, dtype=np.uint8).tobytes())
    return path


def load_splits(path: PathLike, n: int) -> NDArray[np.uint8]:
    path = Path(path)
    splits = np.frombuffer(path.read_bytes(), dtype=np.uint8).copy()
    if splits.size != n:
        raise HeaderInconsistencyError(path, f"split 길이 {splits.size} != 샘플 수 {n}")
    if np.any(splits > Split.TEST):
        raise HeaderInconsistencyError(path, "split 값은 0, 1, 2 중 하나여야 합니다.")
    return splits


# ==================== 매니페스트 ====================
def save_manifest(path: PathLike, manifest: DatasetManifest) -> Path:
    path = Path(path)
    lines = [f"x={manifest.x}", f"y={manifest.y}", f"labels={manifest.labels}"]
    if manifest.split is not None:
        lines.append(f"split={manifest.split}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_manifest(path: PathLike) -> DatasetManifest:
    """
    key=value 매니페스트를 읽습니다.

    상대경로는 매니페스트 파일 위치 기준으로 해석합니다.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"매니페스트가 없습니다: {path}")

    entries: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: key=value 형식이 아닙니다: '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DATASET_FILES:
            raise ConfigError(f"{path}:{lineno}: 알 수 없는 키 '{key}'")
        entries[key] = value

    try:
        manifest = DatasetManifest(**entries)
    except ValidationError as e:
        raise ConfigError(f"{path}: 매니페스트 오류: {e}") from e

    base = path.parent
    return manifest.model_copy(update={
        key: base / value
        for key, value in manifest.model_dump().items()
        if value is not None and not Path(value).is_absolute()
    })


# ==================== 데이터셋 ====================
def save_dataset(dataset: PairedDataset, out_dir: PathLike) -> Path:
    """
    데이터셋을 특징/레이블/split/매니페스트 파일로 저장합니다.

    Returns:
        매니페스트 경로
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    save_features(out_dir / DATASET_FILES["x"], dataset.x)
    save_features(out_dir / DATASET_FILES["y"], dataset.y)
    save_labels(out_dir / DATASET_FILES["labels"], dataset.labels, dataset.num_classes)
    save_splits(out_dir / DATASET_FILES["split"], dataset.splits)
    manifest_path = save_manifest(
        out_dir / MANIFEST_NAME,
        DatasetManifest(**{key: Path(name) for key, name in DATASET_FILES.items()}),
    )
    _log.info(f"Dataset saved: {manifest_path} (N={dataset.n})")
    return manifest_path


def load_dataset(manifest_path: PathLike) -> PairedDataset:
    """매니페스트가 가리키는 파일들로 PairedDataset을 만듭니다."""
    manifest = load_manifest(manifest_path)

    x = load_features(manifest.x)
    y = load_features(manifest.y)
    labels, num_classes = load_labels(manifest.labels)
    if not (x.shape[0] == y.shape[0] == labels.size):
        raise HeaderInconsistencyError(
            manifest_path, f"샘플 수 불일치: x={x.shape[0]}, y={y.shape[0]}, labels={labels.size}"
        )
    splits = load_splits(manifest.split, labels.size) if manifest.split is not None else None

    dataset = PairedDataset(x=x, y=y, labels=labels, num_classes=num_classes, splits=splits)
    _log.info(f"Dataset loaded: {manifest_path} (N={dataset.n}, C={num_classes}, d1={dataset.d1}, d2={dataset.d2})")
    return dataset
