"""
데이터 스키마
합성 데이터 생성 설정과 데이터셋 매니페스트를 정의합니다.
"""

from enum import IntEnum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field


class Split(IntEnum):
    """split 파일의 바이트 값"""
    TRAIN = 0
    VAL = 1
    TEST = 2

    @classmethod
    def parse(cls, text: str) -> "Split":
        return cls[text.strip().upper()]


class SyntheticSpec(BaseModel):
    """
    합성 데이터 설정

    클래스마다 x/y 중심점을 독립적으로 뽑고, 중심점 + 가우시안 잡음으로 샘플을 만듭니다.
    pair_noise 비율의 쌍은 같은 클래스의 임의 샘플과 다시 짝지어집니다.
    """
    num_classes: int = Field(ge=1, description="클래스 수 C", examples=[10])
    n_per_class: int = Field(ge=1, description="클래스당 샘플 수", examples=[200])
    d1: int = Field(ge=1, description="모달리티 x 특징 차원", examples=[64])
    d2: int = Field(ge=1, description="모달리티 y 특징 차원", examples=[48])
    cluster_spread: float = Field(default=0.15, gt=0, description="클러스터 표준편차")
    pair_noise: float = Field(default=0.0, ge=0, le=1, description="클래스 내 재매칭 비율")
    seed: int = Field(default=7, description="난수 시드")


class DatasetManifest(BaseModel):
    """
    데이터셋 매니페스트 (key=value 텍스트 파일)

    경로는 매니페스트 파일 위치 기준 상대경로를 허용합니다.
    """
    x: Path = Field(description="모달리티 x 특징 파일")
    y: Path = Field(description="모달리티 y 특징 파일")
    labels: Path = Field(description="레이블 파일")
    split: Optional[Path] = Field(default=None, description="split 파일 (없으면 전부 train)")
