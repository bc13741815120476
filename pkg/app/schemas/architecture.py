"""
모델 구조 스키마
서브네트워크별 레이어 크기와 BatchNorm 사용 여부를 정의합니다.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PresetName(str, Enum):
    """구조 프리셋"""
    AUDIOSET = "audioset"
    WIKIPEDIA = "wikipedia"
    PASCAL = "pascal"
    CUSTOM = "custom"


class SubnetArch(BaseModel):
    """단일 MLP 구조"""
    dims: list[int] = Field(description="레이어 크기 (입력, 은닉..., 출력)", examples=[[1024, 256, 256]])
    batchnorm: Optional[list[bool]] = Field(
        default=None,
        description="은닉 블록별 BatchNorm 여부 (None이면 모든 은닉 블록에 사용)",
    )

    @model_validator(mode="after")
    def _check(self) -> "SubnetArch":
        if len(self.dims) < 2 or any(d <= 0 for d in self.dims):
            raise ValueError(f"유효하지 않은 dims: {self.dims}")
        if self.batchnorm is not None and len(self.batchnorm) != len(self.dims) - 2:
            raise ValueError(
                f"batchnorm 플래그 수({len(self.batchnorm)})가 은닉층 수({len(self.dims) - 2})와 다릅니다."
            )
        return self

    @property
    def batchnorm_flags(self) -> list[bool]:
        if self.batchnorm is None:
            return [True] * (len(self.dims) - 2)
        return list(self.batchnorm)


class ArchPreset(BaseModel):
    """
    구조 프리셋 선택

    audioset / wikipedia / pascal 은 입력 차원과 클래스 수로부터 구조를 만들고,
    custom 은 6개 서브네트워크 구조를 모두 명시해야 합니다.
    """
    model_config = ConfigDict(use_enum_values=True)

    name: PresetName = Field(default=PresetName.AUDIOSET, description="프리셋 이름")
    e_x: Optional[SubnetArch] = None
    e_y: Optional[SubnetArch] = None
    c_x: Optional[SubnetArch] = None
    c_y: Optional[SubnetArch] = None
    t_xy: Optional[SubnetArch] = None
    t_yx: Optional[SubnetArch] = None

    @model_validator(mode="after")
    def _custom_complete(self) -> "ArchPreset":
        if self.name == PresetName.CUSTOM:
            missing = [
                key for key in ("e_x", "e_y", "c_x", "c_y", "t_xy", "t_yx")
                if getattr(self, key) is None
            ]
            if missing:
                raise ValueError(f"custom 프리셋에 누락된 서브네트워크: {missing}")
        return self
