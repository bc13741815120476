"""
DSTC 모델
6개 서브네트워크(E_x, E_y, C_x, C_y, T_xy, T_yx)를 묶고,
모든 손실 항이 공유하는 활성값을 한 번에 계산합니다.

정보 흐름:
    ex = E_x(x)            ey = E_y(y)
    txy = T_xy(ex)         tyx = T_yx(ey)
    rtx = T_yx(txy)        rty = T_xy(tyx)
    logits: C_x(ex), C_y(ey), C_y(txy), C_x(tyx), C_x(rtx), C_y(rty)
"""

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.data_sources.dataset import Batch
from app.domain.errors import DimensionMismatchError, EmptySplitError
from app.domain.nn_layers import (
    ForwardCache,
    GradSet,
    Mlp,
    Mode,
    init_mlp,
    mlp_backward,
    mlp_forward,
)
from app.domain.presets import resolve_architecture
from app.domain.tensor_core import DenseMatrix
from app.schemas.architecture import ArchPreset
from app.schemas.training import Subnet, TrainMask

ModelGrads = dict[Subnet, GradSet]

# 활성값 이름 -> (서브네트워크, 입력 활성값 이름)
FLOW: dict[str, tuple[Subnet, str]] = {
    "ex": (Subnet.E_X, "x"),
    "ey": (Subnet.E_Y, "y"),
    "txy": (Subnet.T_XY, "ex"),
    "tyx": (Subnet.T_YX, "ey"),
    "rtx": (Subnet.T_YX, "txy"),
    "rty": (Subnet.T_XY, "tyx"),
    "logits_x": (Subnet.C_X, "ex"),
    "logits_y": (Subnet.C_Y, "ey"),
    "logits_xy": (Subnet.C_Y, "txy"),
    "logits_yx": (Subnet.C_X, "tyx"),
    "logits_xyx": (Subnet.C_X, "rtx"),
    "logits_yxy": (Subnet.C_Y, "rty"),
}

UNIMODAL = ("ex", "ey", "logits_x", "logits_y")

# backward 순서: 출력 쪽부터 입력 쪽으로
BACKWARD_ORDER = (
    "logits_x", "logits_y", "logits_xy", "logits_yx", "logits_xyx", "logits_yxy",
    "rtx", "rty", "txy", "tyx", "ex", "ey",
)


@dataclass(eq=False)
class DstcModel:
    """6개 서브네트워크 컨테이너"""

    e_x: Mlp
    e_y: Mlp
    c_x: Mlp
    c_y: Mlp
    t_xy: Mlp
    t_yx: Mlp

    def __post_init__(self):
        x_space = self.e_x.out_dim
        y_space = self.e_y.out_dim
        checks = [
            ("C_x 입력", self.c_x.in_dim, x_space),
            ("T_xy 입력", self.t_xy.in_dim, x_space),
            ("T_yx 출력", self.t_yx.out_dim, x_space),
            ("C_y 입력", self.c_y.in_dim, y_space),
            ("T_yx 입력", self.t_yx.in_dim, y_space),
            ("T_xy 출력", self.t_xy.out_dim, y_space),
            ("y 공간", y_space, x_space),
            ("C_y 출력", self.c_y.out_dim, self.c_x.out_dim),
        ]
        for name, actual, expected in checks:
            if actual != expected:
                raise DimensionMismatchError(f"DstcModel {name}", (actual,), (expected,))

    def subnet(self, name: Subnet | str) -> Mlp:
        return getattr(self, Subnet(name).value)

    def subnets(self) -> dict[Subnet, Mlp]:
        return {s: self.subnet(s) for s in Subnet}

    def parameters(self) -> dict[Subnet, GradSet]:
        return {s: net.parameters() for s, net in self.subnets().items()}

    @property
    def embed_dim(self) -> int:
        return self.e_x.out_dim

    @property
    def num_classes(self) -> int:
        return self.c_x.out_dim

    @property
    def d1(self) -> int:
        return self.e_x.in_dim

    @property
    def d2(self) -> int:
        return self.e_y.in_dim


def build_model(preset: ArchPreset, num_classes: int, d1: int, d2: int, seed: int) -> DstcModel:
    """
    프리셋으로 모델 생성

    서브네트워크마다 seed에서 파생한 시드로 init_mlp를 호출합니다.
    """
    arch = resolve_architecture(preset, num_classes, d1, d2)
    nets = {
        subnet.value: init_mlp(a.dims, a.batchnorm_flags, seed=seed * 1000 + i)
        for i, (subnet, a) in enumerate(arch.items())
    }
    return DstcModel(**nets)


@dataclass
class ActivationBundle:
    """forward_all 결과 (활성값 + backward 캐시)"""

    mode: Mode
    values: dict[str, DenseMatrix] = field(default_factory=dict)
    caches: dict[str, ForwardCache] = field(default_factory=dict)

    def __getattr__(self, name: str) -> DenseMatrix:
        values = self.__dict__.get("values", {})
        if name in values:
            return values[name]
        raise AttributeError(name)


def forward_all(
    model: DstcModel,
    batch: Batch,
    mode: Mode = Mode.TRAIN,
    include_translations: bool = True,
    stats_mask: Optional[TrainMask] = None,
) -> ActivationBundle:
    """
    모든 손실 항이 쓰는 활성값을 한 번씩 계산합니다.

    Args:
        include_translations: False면 단일 모달 경로(ex, ey, logits_x, logits_y)만 계산
        stats_mask: 주어지면 학습 불가로 표시된 서브네트워크는 학습 모드에서도
            BatchNorm running 통계를 갱신하지 않음 (None이면 전부 갱신)
    """
    mode = Mode(mode)
    if batch.size == 0:
        raise EmptySplitError("forward_all: 빈 배치")
    if batch.x.shape[1] != model.d1 or batch.y.shape[1] != model.d2:
        raise DimensionMismatchError("forward_all", batch.x.shape, batch.y.shape, (model.d1, model.d2))

    bundle = ActivationBundle(mode=mode, values={"x": batch.x, "y": batch.y})
    names = FLOW.keys() if include_translations else UNIMODAL
    for name in names:
        subnet, source = FLOW[name]
        update = stats_mask is None or stats_mask.is_trainable(subnet)
        out, cache = mlp_forward(model.subnet(subnet), bundle.values[source], mode, update_stats=update)
        bundle.values[name] = out
        bundle.caches[name] = cache
    return bundle


def zero_grads(model: DstcModel) -> ModelGrads:
    return {s: {k: np.zeros_like(v) for k, v in params.items()} for s, params in model.parameters().items()}


def backward_all(
    model: DstcModel,
    bundle: ActivationBundle,
    activation_grads: dict[str, DenseMatrix],
) -> ModelGrads:
    """
    활성값 그래디언트를 모든 서브네트워크 파라미터 그래디언트로 역전파합니다.

    같은 서브네트워크가 여러 경로에 쓰이면(예: C_x는 ex, tyx, rtx) 그래디언트를 합산합니다.
    그래디언트가 없는 경로는 건너뜁니다.
    """
    grads = zero_grads(model)
    pending: dict[str, DenseMatrix] = {k: v for k, v in activation_grads.items() if v is not None}

    for name in BACKWARD_ORDER:
        grad = pending.pop(name, None)
        if grad is None:
            continue
        if name not in bundle.caches:
            raise DimensionMismatchError(f"backward_all: '{name}' 활성값이 계산되지 않았습니다", ())
        subnet, source = FLOW[name]
        grad_input, param_grads = mlp_backward(model.subnet(subnet), bundle.caches[name], grad)
        for key, value in param_grads.items():
            grads[subnet][key] += value
        if source in FLOW:
            pending[source] = pending[source] + grad_input if source in pending else grad_input

    return grads


def embed(model: DstcModel, batch: Batch) -> ActivationBundle:
    """평가용 eval 모드 forward"""
    return forward_all(model, batch, mode=Mode.EVAL)


def model_checksums(model: DstcModel) -> dict[Subnet, str]:
    """서브네트워크별 sha256 (파라미터 + BatchNorm running 통계)"""
    out = {}
    for subnet, net in model.subnets().items():
        h = hashlib.sha256()
        for layer in net.layers:
            for name in ("weight", "bias", "gamma", "beta", "running_mean", "running_var"):
                value: Optional[np.ndarray] = getattr(layer, name, None)
                if value is not None:
                    h.update(name.encode())
                    h.update(np.ascontiguousarray(value).tobytes())
        out[subnet] = h.hexdigest()
    return out
