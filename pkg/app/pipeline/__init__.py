"""
DSTC Pipeline 패키지
2단계 학습과 손실 조합 ablation을 담당합니다.
명령 단위 실행은 app.pipeline.orchestrator.PipelineOrchestrator를 사용합니다.
"""

from .trainer import train, train_stage1, train_stage2, validate
from .ablation import ABLATION_ROWS, parse_rows, run_ablation

__all__ = [
    "train",
    "train_stage1",
    "train_stage2",
    "validate",
    "ABLATION_ROWS",
    "parse_rows",
    "run_ablation",
]
