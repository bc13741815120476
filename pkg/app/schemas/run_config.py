"""
실행 설정 스키마
CLI의 train/ablate 명령이 읽는 JSON 설정 문서입니다.
CLI 플래그는 이 문서의 키를 덮어씁니다.
"""

from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from .architecture import ArchPreset
from .training import TrainConfig


class RunConfig(BaseModel):
    """
    실행 설정

    학습 설정 + 구조 프리셋 + 데이터/출력 경로
    """
    model_config = ConfigDict(extra="forbid")

    train: TrainConfig = Field(default_factory=TrainConfig)
    preset: ArchPreset = Field(default_factory=ArchPreset)
    data: Optional[Path] = Field(default=None, description="데이터셋 매니페스트 경로")
    out: Optional[Path] = Field(default=None, description="출력 디렉터리")
