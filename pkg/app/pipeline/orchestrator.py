"""
Pipeline Orchestrator
데이터 생성, 학습, 평가, ablation, gradient check 단계를 실행하고 결과 파일을 씁니다.
"""

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd
from loguru import logger
from rich.console import Console

from app.agents.evaluate_agent import EvaluateAgent, EvaluateInput
from app.agents.report_agent import ReportAgent, ReportArtifacts, ReportInput
from app.agents.train_agent import TrainAgent, TrainInput
from app.data_sources.feature_io import load_dataset, save_dataset
from app.data_sources.model_store import load_model, save_model
from app.data_sources.synthetic import generate_synthetic
from app.domain.gradcheck import run_gradcheck
from app.pipeline.ablation import run_ablation
from app.schemas.data import Split, SyntheticSpec
from app.schemas.results import Direction, GradCheckReport, RetrievalReport, TrainHistory
from app.schemas.run_config import RunConfig
from app.schemas.training import AblationRow, PointwiseMetric

MODEL_FILE = "model.bin"
RESOLVED_CONFIG_FILE = "config.resolved.json"
ABLATION_FILE = "ablation.csv"


@dataclass
class TrainRun:
    """train 명령 결과"""
    model_path: Path
    history: TrainHistory
    artifacts: ReportArtifacts


class PipelineOrchestrator:
    """
    파이프라인 오케스트레이터

    명령마다 단계별 소요 시간을 콘솔에 출력합니다.
    """

    def __init__(self, console: Optional[Console] = None):
        self.train_agent = TrainAgent()
        self.evaluate_agent = EvaluateAgent()
        self.report_agent = ReportAgent()

        self.console = console or Console(stderr=True)
        self.logger = logger.bind(component="Pipeline")

    def _step(self, number: int, title: str, started: float) -> None:
        self.console.print(f"✅ Step {number}. {title} ({time.time() - started:.1f}초)")

    def _header(self, title: str) -> None:
        self.console.print("\n" + "=" * 60)
        self.console.print(f"🔁 {title}")
        self.console.print("=" * 60)

    # ==================== synth ====================
    def synth(self, spec: SyntheticSpec, out_dir: Path) -> Path:
        """합성 데이터셋 생성 후 저장, 매니페스트 경로 반환"""
        self._header("합성 데이터 생성")
        started = time.time()
        dataset = generate_synthetic(spec)
        self._step(1, f"생성: n={dataset.n}, d1={dataset.d1}, d2={dataset.d2}, C={dataset.num_classes}", started)

        started = time.time()
        manifest = save_dataset(dataset, out_dir)
        self._step(2, f"저장: {manifest}", started)
        return manifest

    # ==================== train ====================
    def train(self, config: RunConfig, manifest: Path, out_dir: Path) -> TrainRun:
        """
        2단계 학습 후 model.bin, history.csv, val_report.csv, config.resolved.json 저장

        val split이 비어 있으면 val 리포트는 생략합니다.
        """
        self._header("DSTC 학습")
        pipeline_start = time.time()
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        # 1. 데이터 로드
        started = time.time()
        data = load_dataset(manifest)
        counts = {s.name.lower(): int(data.indices(s).size) for s in Split}
        self._step(1, f"데이터 로드: {counts}", started)

        resolved = config.model_copy(update={"data": Path(manifest), "out": out_dir})
        (out_dir / RESOLVED_CONFIG_FILE).write_text(resolved.model_dump_json(indent=2), encoding="utf-8")

        # 2. 학습
        started = time.time()
        result = self.train_agent.run(TrainInput(config=resolved, data=data))
        self._step(2, f"학습: {len(result.history.steps)} steps, best epoch={result.history.best_epoch}", started)

        # 3. 모델 저장
        started = time.time()
        model_path = save_model(out_dir / MODEL_FILE, result.model)
        self._step(3, f"모델 저장: {model_path}", started)

        # 4. val 평가 + 리포트
        started = time.time()
        reports: list[RetrievalReport] = []
        if data.indices(Split.VAL).size > 0:
            reports = self.evaluate_agent.run(EvaluateInput(
                model=result.model,
                data=data,
                split=Split.VAL,
                metrics=[PointwiseMetric.COSINE, PointwiseMetric.EUCLIDEAN],
            ))
        else:
            self.logger.warning("val split이 비어 있어 val 리포트를 생략합니다.")
        artifacts = self.report_agent.run(ReportInput(out_dir=out_dir, history=result.history, reports=reports))
        self._step(4, "리포트 저장", started)

        self.console.print(f"🏁 학습 완료 ({time.time() - pipeline_start:.1f}초)")
        return TrainRun(model_path=model_path, history=result.history, artifacts=artifacts)

    # ==================== eval ====================
    def evaluate(
        self,
        model_path: Path,
        manifest: Path,
        directions: Sequence[Direction] = (Direction.BOTH,),
        metrics: Sequence[PointwiseMetric] = (PointwiseMetric.COSINE,),
        split: Split = Split.TEST,
        out_dir: Optional[Path] = None,
    ) -> list[RetrievalReport]:
        """저장된 모델을 split 하나에서 평가 (out_dir가 있으면 리포트 저장)"""
        self._header("검색 평가")
        started = time.time()
        data = load_dataset(manifest)
        model = load_model(model_path, expected_classes=data.num_classes)
        self._step(1, f"모델/데이터 로드: {model_path}", started)

        started = time.time()
        reports = self.evaluate_agent.run(EvaluateInput(
            model=model,
            data=data,
            split=split,
            directions=list(directions),
            metrics=list(metrics),
        ))
        self._step(2, f"평가: {split.name.lower()} split, 리포트 {len(reports)}개", started)

        if out_dir is not None:
            self.report_agent.run(ReportInput(out_dir=Path(out_dir), reports=reports, prefix=split.name.lower()))
        return reports

    # ==================== ablate ====================
    def ablate(
        self,
        config: RunConfig,
        manifest: Path,
        rows: Sequence[AblationRow],
        train_metrics: Sequence[PointwiseMetric],
        out_dir: Path,
        seeds: Optional[Sequence[int]] = None,
        skip_stage1: bool = False,
    ) -> tuple[pd.DataFrame, Path]:
        """손실 조합 ablation 표를 만들어 ablation.csv로 저장"""
        self._header("손실 조합 ablation")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        started = time.time()
        data = load_dataset(manifest)
        self._step(1, f"데이터 로드: n={data.n}", started)

        resolved = config.model_copy(update={"data": Path(manifest), "out": out_dir})
        (out_dir / RESOLVED_CONFIG_FILE).write_text(resolved.model_dump_json(indent=2), encoding="utf-8")

        started = time.time()
        table = run_ablation(
            data,
            config.train,
            config.preset,
            rows,
            train_metrics=train_metrics,
            seeds=seeds,
            skip_stage1=skip_stage1,
        )
        self._step(2, f"학습/평가: {len(rows)} rows x {len(seeds) if seeds else 1} seeds", started)

        path = out_dir / ABLATION_FILE
        table.to_csv(path, index=False)
        self.logger.info(f"ablation 표 저장: {path}")
        return table, path

    # ==================== gradcheck ====================
    def gradcheck(
        self,
        dims: int = 8,
        batch: int = 4,
        trials: int = 20,
        seed: int = 0,
        perturb_bug: bool = False,
    ) -> GradCheckReport:
        """유한 차분 gradient check 실행"""
        self._header("Gradient check")
        started = time.time()
        report = run_gradcheck(dims=dims, batch=batch, trials=trials, seed=seed, perturb_bug=perturb_bug)
        status = "통과" if report.passed else f"실패 {len(report.failures)}건"
        summary = f"텐서 {len(report.entries)}개, 원소 {report.compared}개 비교, {status}"
        self._step(1, f"{summary}, max rel error={report.max_rel_error:.2e}", started)
        return report
