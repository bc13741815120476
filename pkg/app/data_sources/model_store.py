"""
모델 바이너리 파일 입출력

형식 (little-endian):
    magic "DSTCMODL" (8 bytes) | u32 version | u32 C | u32 서브네트워크 수(6)
    f64 BatchNorm momentum | f64 BatchNorm eps
    서브네트워크마다 (e_x, e_y, c_x, c_y, t_xy, t_yx 순서):
        u32 레이어 크기 개수 k | k x u32 dims | (k-2) x u8 BatchNorm 플래그
    페이로드 (같은 순서, 레이어 순서):
        Linear: weight float32 (in x out, row-major) | bias float32
        BatchNorm: gamma float32 | beta float32 | running_mean float64 | running_var float64
"""

import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np
from loguru import logger

from app.config import settings
from app.domain.errors import (
    BadMagicError,
    DimensionMismatchError,
    HeaderInconsistencyError,
    ModelShapeMismatchError,
    TruncatedFileError,
    VersionMismatchError,
)
from app.domain.model import DstcModel
from app.domain.nn_layers import BatchNormLayer, LinearLayer, Mlp, ReLULayer
from app.schemas.training import Subnet

MODEL_MAGIC = b"DSTCMODL"
HEADER = struct.Struct("<8sIII")
BN_PARAMS = struct.Struct("<dd")

PathLike = Union[str, Path]

_log = logger.bind(source="ModelStore")


class _Reader:
    """오프셋 기반 순차 읽기 (부족하면 TruncatedFileError)"""

    def __init__(self, path: Path, raw: bytes, offset: int = 0):
        self.path = path
        self.raw = raw
        self.offset = offset

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.raw):
            raise TruncatedFileError(self.path, f"{self.offset} 위치에서 {size} bytes를 읽을 수 없습니다.")
        chunk = self.raw[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: struct.Struct) -> tuple:
        return fmt.unpack(self.take(fmt.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(itemsize * count), dtype=dtype).astype(np.float64)


def _bn_params(model: DstcModel) -> tuple[float, float]:
    for net in model.subnets().values():
        for layer in net.batchnorm_layers():
            return layer.momentum, layer.eps
    return settings.BN_MOMENTUM, settings.BN_EPS


def save_model(path: PathLike, model: DstcModel) -> Path:
    """모델을 파일로 저장합니다 (파라미터 float32, running 통계 float64)."""
    path = Path(path)
    momentum, eps = _bn_params(model)

    parts = [
        HEADER.pack(MODEL_MAGIC, settings.MODEL_FORMAT_VERSION, model.num_classes, len(Subnet)),
        BN_PARAMS.pack(momentum, eps),
    ]
    for net in model.subnets().values():
        dims = net.dims
        parts.append(struct.pack(f"<I{len(dims)}I", len(dims), *dims))
        parts.append(struct.pack(f"<{len(dims) - 2}B", *(int(f) for f in net.batchnorm_flags)))

    for net in model.subnets().values():
        for layer in net.layers:
            if isinstance(layer, LinearLayer):
                parts.append(layer.weight.astype("<f4").tobytes(order="C"))
                parts.append(layer.bias.astype("<f4").tobytes())
            elif isinstance(layer, BatchNormLayer):
                parts.append(layer.gamma.astype("<f4").tobytes())
                parts.append(layer.beta.astype("<f4").tobytes())
                parts.append(layer.running_mean.astype("<f8").tobytes())
                parts.append(layer.running_var.astype("<f8").tobytes())

    path.write_bytes(b"".join(parts))
    _log.info(f"Model saved: {path} (C={model.num_classes}, embed={model.embed_dim})")
    return path


def load_model(path: PathLike, expected_classes: Optional[int] = None) -> DstcModel:
    """
    모델 파일 읽기

    Args:
        expected_classes: 지정하면 파일의 C와 일치해야 함

    Raises:
        BadMagicError, VersionMismatchError, TruncatedFileError, HeaderInconsistencyError
        ModelShapeMismatchError: C 불일치
    """
    path = Path(path)
    reader = _Reader(path, path.read_bytes())

    magic, version, num_classes, n_subnets = reader.unpack(HEADER)
    if magic != MODEL_MAGIC:
        raise BadMagicError(path, f"매직 불일치: {magic!r} (기대값 {MODEL_MAGIC!r})")
    if version != settings.MODEL_FORMAT_VERSION:
        raise VersionMismatchError(path, f"지원하지 않는 버전 {version} (기대값 {settings.MODEL_FORMAT_VERSION})")
    if n_subnets != len(Subnet):
        raise HeaderInconsistencyError(path, f"서브네트워크 수 {n_subnets} != {len(Subnet)}")
    if expected_classes is not None and num_classes != expected_classes:
        raise ModelShapeMismatchError(f"{path}: 모델 클래스 수 {num_classes} != 데이터 클래스 수 {expected_classes}")

    momentum, eps = reader.unpack(BN_PARAMS)

    arch: dict[Subnet, tuple[list[int], list[bool]]] = {}
    for subnet in Subnet:
        (k,) = reader.unpack(struct.Struct("<I"))
        if k < 2:
            raise HeaderInconsistencyError(path, f"{subnet.value}: 레이어 크기 개수 {k} < 2")
        dims = list(reader.unpack(struct.Struct(f"<{k}I")))
        flags = [bool(f) for f in reader.unpack(struct.Struct(f"<{k - 2}B"))]
        arch[subnet] = (dims, flags)

    nets = {}
    for subnet, (dims, flags) in arch.items():
        layers = []
        n_hidden = len(dims) - 2
        for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            weight = reader.array("<f4", fan_in * fan_out).reshape(fan_in, fan_out)
            layers.append(LinearLayer(weight=weight, bias=reader.array("<f4", fan_out)))
            if i < n_hidden:
                if flags[i]:
                    layers.append(BatchNormLayer(
                        gamma=reader.array("<f4", fan_out),
                        beta=reader.array("<f4", fan_out),
                        running_mean=reader.array("<f8", fan_out),
                        running_var=reader.array("<f8", fan_out),
                        momentum=momentum,
                        eps=eps,
                    ))
                layers.append(ReLULayer())
        nets[subnet.value] = Mlp(layers=layers)

    if reader.offset != len(reader.raw):
        raise HeaderInconsistencyError(
            path, f"헤더가 설명하는 크기보다 {len(reader.raw) - reader.offset} bytes가 더 있습니다."
        )

    try:
        model = DstcModel(**nets)
    except DimensionMismatchError as e:
        raise HeaderInconsistencyError(path, f"서브네트워크 연결 오류: {e}") from e
    if model.num_classes != num_classes:
        raise HeaderInconsistencyError(path, f"분류기 출력 {model.num_classes} != 헤더 C {num_classes}")
    _log.info(f"Model loaded: {path} (C={num_classes}, embed={model.embed_dim})")
    return model
