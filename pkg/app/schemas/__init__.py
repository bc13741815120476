"""
DSTC 스키마 패키지
설정, 데이터, 결과의 pydantic 모델을 정의합니다.
"""

from .architecture import ArchPreset, PresetName, SubnetArch
from .data import DatasetManifest, Split, SyntheticSpec
from .results import (
    Direction,
    EpochRecord,
    GradCheckEntry,
    GradCheckReport,
    LossBreakdown,
    MetricGridCell,
    QueryResult,
    RetrievalReport,
    StepRecord,
    TrainHistory,
)
from .run_config import RunConfig
from .training import (
    AblationRow,
    LossWeights,
    PointwiseMetric,
    Stage2Config,
    StageConfig,
    Subnet,
    TrainConfig,
    TrainMask,
)

__all__ = [
    "AblationRow",
    "ArchPreset",
    "PresetName",
    "SubnetArch",
    "DatasetManifest",
    "Split",
    "SyntheticSpec",
    "Direction",
    "EpochRecord",
    "GradCheckEntry",
    "GradCheckReport",
    "LossBreakdown",
    "MetricGridCell",
    "QueryResult",
    "RetrievalReport",
    "StepRecord",
    "TrainHistory",
    "RunConfig",
    "LossWeights",
    "PointwiseMetric",
    "Stage2Config",
    "StageConfig",
    "Subnet",
    "TrainConfig",
    "TrainMask",
]
