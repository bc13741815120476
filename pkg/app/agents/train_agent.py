"""
Train Agent
설정과 데이터셋으로 2단계 학습을 실행합니다.
"""

from dataclasses import dataclass

from app.data_sources.dataset import PairedDataset
from app.domain.errors import DimensionMismatchError, EmptySplitError
from app.domain.model import DstcModel, model_checksums
from app.pipeline.trainer import train
from app.schemas.data import Split
from app.schemas.results import TrainHistory
from app.schemas.run_config import RunConfig

from .base import BaseAgent


@dataclass
class TrainInput:
    """Train Agent 입력"""
    config: RunConfig
    data: PairedDataset


@dataclass
class TrainResult:
    """학습된 모델 + 이력"""
    model: DstcModel
    history: TrainHistory


class TrainAgent(BaseAgent[TrainInput, TrainResult]):
    """
    학습 Agent

    - train split이 있어야 합니다.
    - 2단계 종료 후 서브네트워크 체크섬을 로그로 남깁니다.
    """

    name = "TrainAgent"

    def _validate_input(self, input_data: TrainInput) -> None:
        super()._validate_input(input_data)
        if input_data.data.indices(Split.TRAIN).size < 2:
            raise EmptySplitError(f"{self.name}: train split에 샘플이 2개 이상 필요합니다.")

    def _process(self, input_data: TrainInput) -> TrainResult:
        config = input_data.config
        model, history = train(config.train, input_data.data, config.preset)

        for subnet, digest in model_checksums(model).items():
            self.logger.info(f"{subnet.value}: sha256={digest[:16]}")
        return TrainResult(model=model, history=history)

    def _validate_output(self, output_data: TrainResult) -> None:
        super()._validate_output(output_data)
        if not output_data.history.steps:
            raise ValueError(f"{self.name}: 학습 스텝 기록이 없습니다.")


def check_compatible(model: DstcModel, data: PairedDataset) -> None:
    """모델과 데이터셋의 차원/클래스 수가 맞는지 확인"""
    expected = (model.d1, model.d2, model.num_classes)
    actual = (data.d1, data.d2, data.num_classes)
    if expected != actual:
        raise DimensionMismatchError("model vs data (d1, d2, C)", expected, actual)
