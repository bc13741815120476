"""
결과 스키마
손실 분해, 학습 이력, 검색 평가 리포트, gradient check 결과를 정의합니다.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field

from .training import PointwiseMetric


class Direction(str, Enum):
    """검색 방향"""
    X2Y = "x2y"
    Y2X = "y2x"
    BOTH = "both"


class LossBreakdown(BaseModel):
    """
    결합 손실 분해

    각 항은 가중치를 곱하기 전 값이며,
    total = ce_weight * ce + alpha * pc + beta * dstc + gamma * cpc + delta * cdstc 입니다.
    """
    ce: float
    pc: float
    dstc: float
    cpc: float
    cdstc: float
    total: float


class StepRecord(LossBreakdown):
    """학습 스텝 1회 기록"""
    stage: int = Field(description="학습 단계 (1 또는 2)")
    epoch: int
    step: int = Field(description="단계 내 누적 스텝")


class EpochRecord(BaseModel):
    """에폭 종료 시 검증 결과"""
    stage: int
    epoch: int
    val_map_x2y: float = Field(description="val mAP x->y (cosine)")
    val_map_y2x: float = Field(description="val mAP y->x (cosine)")
    val_map_x2y_euc: float = Field(description="val mAP x->y (euclidean)")
    val_map_y2x_euc: float = Field(description="val mAP y->x (euclidean)")
    val_acc_x: float = Field(description="C_x(E_x(x)) 정확도")
    val_acc_y: float = Field(description="C_y(E_y(y)) 정확도")
    val_acc_xy: float = Field(description="C_y(T_xy(E_x(x))) 정확도")
    val_acc_yx: float = Field(description="C_x(T_yx(E_y(y))) 정확도")

    @property
    def val_map_both(self) -> float:
        return (self.val_map_x2y + self.val_map_y2x) / 2


class TrainHistory(BaseModel):
    """단계별 스텝 손실과 에폭별 검증 기록"""
    steps: list[StepRecord] = Field(default_factory=list)
    epochs: list[EpochRecord] = Field(default_factory=list)
    best_epoch: Optional[int] = Field(default=None, description="조기 종료 시 선택된 2단계 에폭")

    def stage_steps(self, stage: int) -> list[StepRecord]:
        return [r for r in self.steps if r.stage == stage]

    def stage_epochs(self, stage: int) -> list[EpochRecord]:
        return [r for r in self.epochs if r.stage == stage]

    def extend(self, other: "TrainHistory") -> "TrainHistory":
        return TrainHistory(
            steps=self.steps + other.steps,
            epochs=self.epochs + other.epochs,
            best_epoch=other.best_epoch if other.best_epoch is not None else self.best_epoch,
        )


class QueryResult(BaseModel):
    """쿼리 1개의 AP"""
    index: int = Field(description="split 내 쿼리 인덱스")
    query_class: int
    direction: Direction
    ap: Optional[float] = Field(default=None, ge=0, le=1, description="AP (제외된 쿼리는 None)")
    excluded: bool = Field(default=False, description="갤러리에 같은 클래스가 없어 제외됨")


class RetrievalReport(BaseModel):
    """
    검색 평가 리포트

    단일 방향: global_map = 포함된 쿼리 AP의 평균
    both: global_map = 두 방향 mAP의 평균 (class_avg_map도 동일)
    """
    direction: Direction
    metric: PointwiseMetric
    queries: list[QueryResult] = Field(default_factory=list)
    global_map: float = Field(ge=0, le=1)
    class_avg_map: float = Field(ge=0, le=1)
    per_class_map: dict[int, float] = Field(default_factory=dict)
    excluded_count: int = Field(default=0, ge=0)
    gallery_size: int = Field(default=0, ge=0, description="갤러리 크기 (both는 x2y 방향 기준)")
    gallery_sizes: dict[Direction, int] = Field(default_factory=dict, description="방향별 갤러리 크기")


class MetricGridCell(BaseModel):
    """(학습 거리, 평가 거리, 방향) 조합 1칸"""
    train_metric: PointwiseMetric
    test_metric: PointwiseMetric
    direction: Direction
    global_map: float
    class_avg_map: float


class GradCheckEntry(BaseModel):
    """손실 1개 x 파라미터 텐서 1개의 비교 결과 (rel_error는 원소별 최댓값)"""
    trial: int
    loss: str
    subnet: str
    param: str
    rel_error: float
    passed: bool
    compared: int = Field(default=0, ge=0, description="비교한 원소 수")
    kinks: int = Field(default=0, ge=0, description="ReLU 경계를 넘어 비교에서 뺀 원소 수")


class GradCheckReport(BaseModel):
    """gradient check 전체 결과"""
    dims: int
    batch: int
    trials: int
    tolerance: float
    entries: list[GradCheckEntry] = Field(default_factory=list)

    @property
    def failures(self) -> list[GradCheckEntry]:
        return [e for e in self.entries if not e.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_rel_error(self) -> float:
        return max((e.rel_error for e in self.entries), default=0.0)

    @property
    def compared(self) -> int:
        return sum(e.compared for e in self.entries)

    @property
    def kinks(self) -> int:
        """손실 수와 무관하게 (trial, subnet, param) 텐서마다 한 번씩 셉니다."""
        return sum({(e.trial, e.subnet, e.param): e.kinks for e in self.entries}.values())
