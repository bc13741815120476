"""
미분 가능한 레이어 (Linear, BatchNorm, ReLU) 와 MLP

forward는 backward에 필요한 중간값을 ForwardCache에 담아 반환하고,
backward는 캐시를 받아 입력/파라미터 그래디언트를 해석적으로 계산합니다.
자동 미분은 사용하지 않습니다.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from app.config import settings
from app.domain.errors import (
    BatchTooSmallError,
    CacheMismatchError,
    DimensionMismatchError,
    EmptySplitError,
)
from app.domain.tensor_core import DenseMatrix

GradSet = dict[str, NDArray[np.float64]]


class Mode(str, Enum):
    """forward 모드"""
    TRAIN = "train"
    EVAL = "eval"


@dataclass(eq=False)
class LinearLayer:
    """y = x W + b (weight: in_dim x out_dim)"""

    weight: DenseMatrix
    bias: NDArray[np.float64]

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise DimensionMismatchError("LinearLayer", self.weight.shape, self.bias.shape)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]

    def parameters(self) -> GradSet:
        return {"weight": self.weight, "bias": self.bias}

    def forward(self, x: DenseMatrix, mode: Mode, update_stats: bool = True) -> tuple[DenseMatrix, Any]:
        if mode == Mode.EVAL:
            # 샘플마다 동일한 커널을 타도록 (1 x in) 행렬 곱을 쌓아서 계산
            y = np.matmul(x[:, None, :], self.weight)[:, 0, :] + self.bias
        else:
            y = x @ self.weight + self.bias
        return y, x

    def backward(self, cache: DenseMatrix, grad_output: DenseMatrix) -> tuple[DenseMatrix, GradSet]:
        x = cache
        grads = {
            "weight": x.T @ grad_output,
            "bias": grad_output.sum(axis=0),
        }
        return grad_output @ self.weight.T, grads


@dataclass(eq=False)
class BatchNormLayer:
    """
    BatchNorm1d

    학습 모드: 배치 평균/편향 분산으로 정규화하고 running 통계를 갱신합니다.
        running <- (1 - momentum) * running + momentum * batch
    평가 모드: running 통계를 사용 (샘플 단위 순수 함수)
    """

    gamma: NDArray[np.float64]
    beta: NDArray[np.float64]
    running_mean: NDArray[np.float64]
    running_var: NDArray[np.float64]
    momentum: float = field(default_factory=lambda: settings.BN_MOMENTUM)
    eps: float = field(default_factory=lambda: settings.BN_EPS)

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        self.running_mean = np.asarray(self.running_mean, dtype=np.float64)
        self.running_var = np.asarray(self.running_var, dtype=np.float64)
        shapes = {a.shape for a in (self.gamma, self.beta, self.running_mean, self.running_var)}
        if len(shapes) != 1 or self.gamma.ndim != 1:
            raise DimensionMismatchError(
                "BatchNormLayer",
                self.gamma.shape, self.beta.shape, self.running_mean.shape, self.running_var.shape,
            )
        if not 0 < self.momentum <= 1:
            raise ValueError(f"momentum은 (0, 1] 범위여야 합니다: {self.momentum}")
        if self.eps <= 0:
            raise ValueError(f"eps는 양수여야 합니다: {self.eps}")
        if np.any(self.running_var < 0):
            raise ValueError("running_var에 음수가 있습니다.")

    @classmethod
    def fresh(cls, dim: int, **kwargs) -> "BatchNormLayer":
        """gamma=1, beta=0, running_mean=0, running_var=1 로 초기화"""
        return cls(
            gamma=np.ones(dim),
            beta=np.zeros(dim),
            running_mean=np.zeros(dim),
            running_var=np.ones(dim),
            **kwargs,
        )

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]

    def parameters(self) -> GradSet:
        return {"gamma": self.gamma, "beta": self.beta}

    def forward(self, x: DenseMatrix, mode: Mode, update_stats: bool = True) -> tuple[DenseMatrix, Any]:
        if mode == Mode.TRAIN:
            if x.shape[0] < 2:
                raise BatchTooSmallError(
                    f"BatchNorm 학습 모드는 배치 크기 2 이상이 필요합니다 (batch={x.shape[0]})"
                )
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            if update_stats:
                self.running_mean = (1.0 - self.momentum) * self.running_mean + self.momentum * mean
                self.running_var = (1.0 - self.momentum) * self.running_var + self.momentum * var
        else:
            mean = self.running_mean
            var = self.running_var

        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mean) * inv_std
        return self.gamma * x_hat + self.beta, (x_hat, inv_std)

    def backward(self, cache, grad_output: DenseMatrix) -> tuple[DenseMatrix, GradSet]:
        x_hat, inv_std = cache
        n = grad_output.shape[0]
        grads = {
            "gamma": np.sum(grad_output * x_hat, axis=0),
            "beta": grad_output.sum(axis=0),
        }
        g_hat = grad_output * self.gamma
        # 배치 평균/분산을 통한 경로까지 포함한 입력 그래디언트
        grad_input = (inv_std / n) * (
            n * g_hat - g_hat.sum(axis=0) - x_hat * np.sum(g_hat * x_hat, axis=0)
        )
        return grad_input, grads


@dataclass(eq=False)
class ReLULayer:
    """max(x, 0); x == 0 에서의 서브그래디언트는 0"""

    def parameters(self) -> GradSet:
        return {}

    def forward(self, x: DenseMatrix, mode: Mode, update_stats: bool = True) -> tuple[DenseMatrix, Any]:
        return np.where(x > 0, x, 0.0), x

    def backward(self, cache: DenseMatrix, grad_output: DenseMatrix) -> tuple[DenseMatrix, GradSet]:
        return np.where(cache > 0, grad_output, 0.0), {}


Layer = Union[LinearLayer, BatchNormLayer, ReLULayer]


@dataclass(eq=False)
class Mlp:
    """
    다층 퍼셉트론

    은닉 블록: Linear -> (BatchNorm) -> ReLU
    마지막 블록: Linear
    """

    layers: list[Layer]

    def __post_init__(self):
        linears = [layer for layer in self.layers if isinstance(layer, LinearLayer)]
        if not linears:
            raise ValueError("Mlp에는 Linear 레이어가 최소 1개 필요합니다.")
        if not isinstance(self.layers[-1], LinearLayer):
            raise ValueError("Mlp의 마지막 레이어는 Linear여야 합니다.")

        width = linears[0].in_dim
        for layer in self.layers:
            if isinstance(layer, LinearLayer):
                if layer.in_dim != width:
                    raise DimensionMismatchError("Mlp 레이어 연결", (width,), layer.weight.shape)
                width = layer.out_dim
            elif isinstance(layer, BatchNormLayer) and layer.dim != width:
                raise DimensionMismatchError("Mlp BatchNorm 연결", (width,), (layer.dim,))

    @property
    def linears(self) -> list[LinearLayer]:
        return [layer for layer in self.layers if isinstance(layer, LinearLayer)]

    @property
    def dims(self) -> list[int]:
        linears = self.linears
        return [linears[0].in_dim] + [layer.out_dim for layer in linears]

    @property
    def batchnorm_flags(self) -> list[bool]:
        """은닉 블록별 BatchNorm 사용 여부"""
        flags = []
        for i, layer in enumerate(self.layers[:-1]):
            if isinstance(layer, LinearLayer):
                flags.append(isinstance(self.layers[i + 1], BatchNormLayer))
        return flags

    @property
    def in_dim(self) -> int:
        return self.dims[0]

    @property
    def out_dim(self) -> int:
        return self.dims[-1]

    @property
    def has_batchnorm(self) -> bool:
        return any(isinstance(layer, BatchNormLayer) for layer in self.layers)

    def parameters(self) -> GradSet:
        """'{레이어 인덱스}.{이름}' 키로 파라미터 배열(참조)을 반환"""
        params = {}
        for i, layer in enumerate(self.layers):
            for name, value in layer.parameters().items():
                params[f"{i}.{name}"] = value
        return params

    def batchnorm_layers(self) -> list[BatchNormLayer]:
        return [layer for layer in self.layers if isinstance(layer, BatchNormLayer)]


@dataclass
class ForwardCache:
    """레이어별 backward 중간값"""

    mode: Mode
    net_id: int
    batch_size: int = 0
    entries: list[Any] = field(default_factory=list)


def init_mlp(
    dims: Sequence[int],
    with_batchnorm: Union[bool, Sequence[bool]] = True,
    seed: int = 0,
) -> Mlp:
    """
    MLP 초기화

    가중치: U(-sqrt(6 / (fan_in + fan_out)), +sqrt(6 / (fan_in + fan_out)))
    바이어스 0, gamma 1, beta 0, running_mean 0, running_var 1

    Args:
        dims: 레이어 크기 목록 (입력, 은닉..., 출력)
        with_batchnorm: 은닉 블록별 BatchNorm 여부 (bool이면 전체에 적용)
        seed: 난수 시드
    """
    dims = list(dims)
    if len(dims) < 2 or any(int(d) <= 0 for d in dims):
        raise ValueError(f"유효하지 않은 dims: {dims}")

    n_hidden = len(dims) - 2
    if isinstance(with_batchnorm, bool):
        flags = [with_batchnorm] * n_hidden
    else:
        flags = list(with_batchnorm)
        if len(flags) != n_hidden:
            raise ValueError(f"BatchNorm 플래그 수({len(flags)})가 은닉층 수({n_hidden})와 다릅니다.")

    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append(LinearLayer(
            weight=rng.uniform(-limit, limit, size=(fan_in, fan_out)),
            bias=np.zeros(fan_out),
        ))
        if i < n_hidden:
            if flags[i]:
                layers.append(BatchNormLayer.fresh(fan_out))
            layers.append(ReLULayer())

    return Mlp(layers=layers)


def mlp_forward(
    net: Mlp,
    x: DenseMatrix,
    mode: Mode = Mode.TRAIN,
    update_stats: bool = True,
) -> tuple[DenseMatrix, ForwardCache]:
    """
    MLP forward

    train 모드는 배치 통계를 쓰고 running 통계를 갱신합니다 (update_stats=False면 갱신 생략).
    eval 모드는 running 통계를 쓰며 샘플 단위 순수 함수입니다.
    """
    mode = Mode(mode)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise DimensionMismatchError("mlp_forward", x.shape, (None, net.in_dim))
    if x.shape[0] == 0:
        raise EmptySplitError("mlp_forward: 빈 배치")
    if mode == Mode.TRAIN and net.has_batchnorm and x.shape[0] < 2:
        raise BatchTooSmallError(
            f"BatchNorm이 있는 네트워크의 학습 모드 forward는 배치 2 이상 필요 (batch={x.shape[0]})"
        )

    cache = ForwardCache(mode=mode, net_id=id(net), batch_size=x.shape[0])
    out = x
    for layer in net.layers:
        out, entry = layer.forward(out, mode, update_stats)
        cache.entries.append(entry)
    return out, cache


def mlp_backward(net: Mlp, cache: ForwardCache, grad_output: DenseMatrix) -> tuple[DenseMatrix, GradSet]:
    """
    MLP backward

    Returns:
        (입력 그래디언트, parameters()와 같은 키의 파라미터 그래디언트)
    """
    if cache.mode != Mode.TRAIN:
        raise CacheMismatchError("eval 모드 캐시로는 backward를 할 수 없습니다.")
    if cache.net_id != id(net) or len(cache.entries) != len(net.layers):
        raise CacheMismatchError("ForwardCache가 네트워크와 일치하지 않습니다.")
    if grad_output.ndim != 2 or grad_output.shape != (cache.batch_size, net.out_dim):
        raise DimensionMismatchError("mlp_backward", grad_output.shape, (cache.batch_size, net.out_dim))

    grads: GradSet = {}
    grad = grad_output
    for i in range(len(net.layers) - 1, -1, -1):
        grad, layer_grads = net.layers[i].backward(cache.entries[i], grad)
        for name, value in layer_grads.items():
            grads[f"{i}.{name}"] = value
    return grad, grads
