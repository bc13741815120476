"""
Report Agent
학습 이력과 검색 평가 결과를 CSV/텍스트 파일로 저장합니다.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import pandas as pd

from app.domain.retrieval import queries_frame, render_summary
from app.schemas.results import RetrievalReport, TrainHistory

from .base import BaseAgent

HISTORY_COLUMNS = [
    "stage", "epoch", "step",
    "ce", "pc", "dstc", "cpc", "cdstc", "total",
    "val_map_x2y", "val_map_y2x",
    "val_map_x2y_euc", "val_map_y2x_euc",
    "val_acc_x", "val_acc_y", "val_acc_xy", "val_acc_yx",
]


@dataclass
class ReportInput:
    """Report Agent 입력 (이력, 리포트 중 있는 것만 저장)"""
    out_dir: Path
    history: Optional[TrainHistory] = None
    reports: list[RetrievalReport] = field(default_factory=list)
    prefix: str = "val"


@dataclass
class ReportArtifacts:
    """저장된 파일 경로"""
    history_csv: Optional[Path] = None
    report_csv: Optional[Path] = None
    summary_txt: Optional[Path] = None
    summary: str = ""


def history_frame(history: TrainHistory) -> pd.DataFrame:
    """
    스텝 1개당 1행

    에폭 검증 값은 그 에폭의 마지막 스텝 행에만 채우고 나머지는 비워 둡니다.
    """
    steps = pd.DataFrame([r.model_dump() for r in history.steps])
    if steps.empty:
        return pd.DataFrame(columns=HISTORY_COLUMNS)

    epochs = pd.DataFrame([r.model_dump() for r in history.epochs])
    if not epochs.empty:
        last = steps.groupby(["stage", "epoch"], sort=False)["step"].max().reset_index()
        epochs = epochs.merge(last, on=["stage", "epoch"], how="inner")
        steps = steps.merge(epochs, on=["stage", "epoch", "step"], how="left")
    return steps.reindex(columns=HISTORY_COLUMNS)


def reports_frame(reports: list[RetrievalReport]) -> pd.DataFrame:
    """쿼리별 행 (거리 컬럼 포함, both 리포트는 두 방향 쿼리를 모두 포함)"""
    frames = []
    for report in reports:
        frame = queries_frame(report)
        frame.insert(0, "metric", report.metric.short)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=["metric", "index", "class", "direction", "ap", "excluded"])
    return pd.concat(frames, ignore_index=True).drop_duplicates(ignore_index=True)


class ReportAgent(BaseAgent[ReportInput, ReportArtifacts]):
    """
    리포트 저장 Agent

    - history.csv: 스텝별 손실 + 에폭별 검증 값
    - {prefix}_report.csv: 쿼리별 AP
    - {prefix}_summary.txt: 방향/거리별 mAP 요약
    """

    name = "ReportAgent"

    def _process(self, input_data: ReportInput) -> ReportArtifacts:
        out_dir = Path(input_data.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        artifacts = ReportArtifacts()

        if input_data.history is not None:
            artifacts.history_csv = out_dir / "history.csv"
            history_frame(input_data.history).to_csv(artifacts.history_csv, index=False)
            self.logger.info(f"학습 이력 저장: {artifacts.history_csv} ({len(input_data.history.steps)} steps)")

        if input_data.reports:
            artifacts.report_csv = out_dir / f"{input_data.prefix}_report.csv"
            reports_frame(input_data.reports).to_csv(artifacts.report_csv, index=False)

            artifacts.summary = render_summary(input_data.reports)
            artifacts.summary_txt = out_dir / f"{input_data.prefix}_summary.txt"
            artifacts.summary_txt.write_text(artifacts.summary + "\n", encoding="utf-8")
            self.logger.info(f"평가 리포트 저장: {artifacts.report_csv}")

        return artifacts
