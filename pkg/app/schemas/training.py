"""
학습 설정 스키마
손실 가중치, 단계별 하이퍼파라미터, 서브네트워크 학습 마스크를 정의합니다.
"""

import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.config import settings


class PointwiseMetric(str, Enum):
    """PC/cPC 손실 및 검색 점수의 거리 함수"""
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"

    @classmethod
    def parse(cls, text: str) -> "PointwiseMetric":
        """'euc' / 'cos' 같은 축약형도 허용"""
        aliases = {"euc": cls.EUCLIDEAN, "cos": cls.COSINE}
        key = text.strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)

    @property
    def short(self) -> str:
        return "euc" if self == PointwiseMetric.EUCLIDEAN else "cos"


class Subnet(str, Enum):
    """DSTC 모델의 6개 서브네트워크"""
    E_X = "e_x"
    E_Y = "e_y"
    C_X = "c_x"
    C_Y = "c_y"
    T_XY = "t_xy"
    T_YX = "t_yx"


class LossWeights(BaseModel):
    """
    결합 손실 가중치

    total = ce_weight * CE + alpha * PC + beta * DSTC + gamma * cPC + delta * cDSTC
    ce_weight는 ablation에서 CE를 끄기 위한 스위치이며 기본값은 1입니다.
    """
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=1.0, ge=0, description="PC (pointwise consistency) 가중치")
    beta: float = Field(default=1.0, ge=0, description="DSTC 가중치")
    gamma: float = Field(default=1.0, ge=0, description="cPC (cyclic pointwise) 가중치")
    delta: float = Field(default=1.0, ge=0, description="cDSTC (cyclic DSTC) 가중치")
    ce_weight: float = Field(default=1.0, ge=0, description="CE 가중치 (ablation 스위치)")
    pointwise_metric: PointwiseMetric = Field(
        default=PointwiseMetric.EUCLIDEAN,
        description="PC/cPC 거리 함수",
    )

    @field_validator("alpha", "beta", "gamma", "delta", "ce_weight")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"가중치는 유한해야 합니다: {value}")
        return value

    @classmethod
    def zeros(cls, pointwise_metric: PointwiseMetric = PointwiseMetric.EUCLIDEAN) -> "LossWeights":
        """1단계 학습용 (CE만 사용)"""
        return cls(alpha=0.0, beta=0.0, gamma=0.0, delta=0.0, pointwise_metric=pointwise_metric)

    @classmethod
    def from_csv(cls, text: str, pointwise_metric: PointwiseMetric = PointwiseMetric.EUCLIDEAN) -> "LossWeights":
        """'1,1,0,0' -> (alpha, beta, gamma, delta)"""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if len(parts) != 4:
            raise ValueError(f"가중치는 alpha,beta,gamma,delta 4개가 필요합니다: '{text}'")
        alpha, beta, gamma, delta = (float(p) for p in parts)
        return cls(alpha=alpha, beta=beta, gamma=gamma, delta=delta, pointwise_metric=pointwise_metric)


class StageConfig(BaseModel):
    """단계별 학습 하이퍼파라미터"""
    epochs: int = Field(default=settings.DEFAULT_EPOCHS, ge=1, description="에폭 수")
    lr: float = Field(default=settings.DEFAULT_LR, gt=0, description="Adam 학습률")
    batch_size: int = Field(
        default=settings.DEFAULT_BATCH_SIZE,
        ge=2,
        description="배치 크기 (BatchNorm 학습 모드 때문에 2 이상)",
    )


class Stage2Config(StageConfig):
    """2단계: 분류기 고정, 인코더 + 번역기 학습"""
    weights: LossWeights = Field(default_factory=LossWeights, description="결합 손실 가중치")


class TrainConfig(BaseModel):
    """
    2단계 학습 설정

    1단계: CE만으로 인코더 + 분류기 학습 (번역기 고정)
    2단계: 분류기 고정, 전체 결합 손실로 인코더 + 번역기 학습
    """
    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "stage1": {"epochs": 30, "lr": 1e-4, "batch_size": 128},
                "stage2": {
                    "epochs": 30,
                    "lr": 1e-4,
                    "batch_size": 128,
                    "weights": {"alpha": 1, "beta": 1, "gamma": 1, "delta": 1},
                },
                "seed": 7,
                "early_stop": True,
                "patience": 10,
            }
        }
    )

    stage1: StageConfig = Field(default_factory=StageConfig)
    stage2: Stage2Config = Field(default_factory=Stage2Config)
    seed: int = Field(default=settings.DEFAULT_SEED, description="난수 시드")
    early_stop: bool = Field(default=True, description="val mAP (both, cosine) 기반 조기 종료")
    patience: int = Field(default=settings.EARLY_STOP_PATIENCE, ge=1, description="조기 종료 인내 에폭")
    skip_stage1: bool = Field(default=False, description="1단계 생략 (ablation 탈출구)")
    grad_clip: Optional[float] = Field(default=None, gt=0, description="전역 그래디언트 노름 클리핑 (기본 끔)")


class TrainMask(BaseModel):
    """서브네트워크별 학습 가능 여부"""
    model_config = ConfigDict(frozen=True)

    e_x: bool = True
    e_y: bool = True
    c_x: bool = True
    c_y: bool = True
    t_xy: bool = True
    t_yx: bool = True

    def is_trainable(self, subnet: "Subnet | str") -> bool:
        return getattr(self, Subnet(subnet).value)

    @classmethod
    def stage1(cls) -> "TrainMask":
        """번역기 고정"""
        return cls(t_xy=False, t_yx=False)

    @classmethod
    def stage2(cls) -> "TrainMask":
        """분류기 고정"""
        return cls(c_x=False, c_y=False)


class AblationRow(BaseModel):
    """
    손실 조합 ablation 행

    켜진 항은 기준 가중치(프리셋/설정의 2단계 가중치)를, 꺼진 항은 0을 씁니다.
    """
    model_config = ConfigDict(frozen=True)

    row: int = Field(ge=1, description="행 번호")
    label: str = Field(description="손실 조합 이름", examples=["CE+PC+DSTC"])
    ce: bool = False
    pc: bool = False
    dstc: bool = False
    cpc: bool = False
    cdstc: bool = False

    def weights(self, base: LossWeights, pointwise_metric: PointwiseMetric) -> LossWeights:
        return LossWeights(
            ce_weight=base.ce_weight if self.ce else 0.0,
            alpha=base.alpha if self.pc else 0.0,
            beta=base.beta if self.dstc else 0.0,
            gamma=base.gamma if self.cpc else 0.0,
            delta=base.delta if self.cdstc else 0.0,
            pointwise_metric=pointwise_metric,
        )
