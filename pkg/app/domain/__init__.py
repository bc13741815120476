"""
DSTC 도메인 로직 패키지
행렬 연산, MLP 레이어, 손실, 옵티마이저, 검색 평가를 담당합니다.

model, losses, retrieval, gradcheck는 데이터셋 타입에 의존하므로
각 모듈에서 직접 import 합니다.
"""

from .errors import DstcError
from .tensor_core import l2_normalize_rows, matmul, squared_distances
from .nn_layers import Mlp, Mode, init_mlp, mlp_backward, mlp_forward
from .optim import AdamState, adam_step
from .presets import preset_defaults, resolve_architecture

__all__ = [
    "DstcError",
    "l2_normalize_rows",
    "matmul",
    "squared_distances",
    "Mlp",
    "Mode",
    "init_mlp",
    "mlp_backward",
    "mlp_forward",
    "AdamState",
    "adam_step",
    "preset_defaults",
    "resolve_architecture",
]
