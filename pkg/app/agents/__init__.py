"""
DSTC Agent 패키지
각 Agent는 단일 책임을 가지며, 정해진 입출력 타입을 따릅니다.
"""

from .base import BaseAgent
from .train_agent import TrainAgent, TrainInput, TrainResult
from .evaluate_agent import EvaluateAgent, EvaluateInput
from .report_agent import ReportAgent, ReportArtifacts, ReportInput

__all__ = [
    "BaseAgent",
    "TrainAgent",
    "TrainInput",
    "TrainResult",
    "EvaluateAgent",
    "EvaluateInput",
    "ReportAgent",
    "ReportArtifacts",
    "ReportInput",
]
