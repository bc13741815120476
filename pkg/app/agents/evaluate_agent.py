"""
Evaluate Agent
학습된 모델을 split 하나에서 검색 평가합니다.
"""

from dataclasses import dataclass, field

from app.data_sources.dataset import PairedDataset
from app.domain.model import DstcModel
from app.domain.retrieval import evaluate_all
from app.schemas.data import Split
from app.schemas.results import Direction, RetrievalReport
from app.schemas.training import PointwiseMetric

from .base import BaseAgent
from .train_agent import check_compatible


@dataclass
class EvaluateInput:
    """Evaluate Agent 입력"""
    model: DstcModel
    data: PairedDataset
    split: Split = Split.TEST
    directions: list[Direction] = field(default_factory=lambda: [Direction.BOTH])
    metrics: list[PointwiseMetric] = field(default_factory=lambda: [PointwiseMetric.COSINE])


class EvaluateAgent(BaseAgent[EvaluateInput, list[RetrievalReport]]):
    """
    검색 평가 Agent

    (거리, 방향) 조합마다 리포트 1개를 반환합니다. both 리포트에는 두 방향 쿼리가 모두 들어 있습니다.
    """

    name = "EvaluateAgent"

    def _validate_input(self, input_data: EvaluateInput) -> None:
        super()._validate_input(input_data)
        check_compatible(input_data.model, input_data.data)

    def _process(self, input_data: EvaluateInput) -> list[RetrievalReport]:
        reports = evaluate_all(
            input_data.model,
            input_data.data,
            input_data.split,
            metrics=tuple(input_data.metrics),
        )

        wanted = list(dict.fromkeys(Direction(d) for d in input_data.directions))
        selected = [reports[(metric, d)] for metric in input_data.metrics for d in wanted]
        for report in selected:
            self.logger.info(
                f"{report.direction.value}/{report.metric.short}: mAP={report.global_map:.4f}, "
                f"class-avg={report.class_avg_map:.4f}"
            )
        return selected
