"""
손실 조합 ablation

행(손실 조합) x 시드마다 학습 거리별 모델을 학습하고,
(학습 거리, 평가 거리, 방향) mAP 표를 만듭니다.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import pandas as pd
from loguru import logger

from app.config import settings
from app.data_sources.dataset import PairedDataset
from app.domain.errors import ConfigError, DuplicateRowError
from app.domain.retrieval import metric_grid
from app.pipeline.trainer import train
from app.schemas.architecture import ArchPreset
from app.schemas.data import Split
from app.schemas.results import Direction
from app.schemas.training import AblationRow, PointwiseMetric, TrainConfig

ABLATION_ROWS: dict[int, AblationRow] = {
    row.row: row
    for row in [
        AblationRow(row=1, label="PC", pc=True),
        AblationRow(row=2, label="DSTC", dstc=True),
        AblationRow(row=3, label="CE+PC", ce=True, pc=True),
        AblationRow(row=4, label="CE+DSTC", ce=True, dstc=True),
        AblationRow(row=5, label="CE+PC+DSTC", ce=True, pc=True, dstc=True),
        AblationRow(row=6, label="CE+PC+cPC", ce=True, pc=True, cpc=True),
        AblationRow(row=7, label="CE+DSTC+cDSTC", ce=True, dstc=True, cdstc=True),
        AblationRow(row=8, label="CE+PC+DSTC+cPC", ce=True, pc=True, dstc=True, cpc=True),
        AblationRow(row=9, label="CE+PC+DSTC+cDSTC", ce=True, pc=True, dstc=True, cdstc=True),
        AblationRow(row=10, label="CE+PC+DSTC+cPC+cDSTC", ce=True, pc=True, dstc=True, cpc=True, cdstc=True),
    ]
}

AGGREGATES = ("mean", "std", "median")

_log = logger.bind(component="Ablation")


def parse_rows(text: str) -> list[AblationRow]:
    """'1,2,5' -> 행 목록 (중복/범위 밖은 오류)"""
    try:
        numbers = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"--rows 형식 오류: '{text}'") from e
    if not numbers:
        raise ConfigError("--rows가 비어 있습니다.")

    duplicates = sorted({n for n in numbers if numbers.count(n) > 1})
    if duplicates:
        raise DuplicateRowError(f"중복된 ablation 행: {duplicates}")
    unknown = [n for n in numbers if n not in ABLATION_ROWS]
    if unknown:
        raise ConfigError(f"알 수 없는 ablation 행: {unknown} (1~{len(ABLATION_ROWS)})")
    return [ABLATION_ROWS[n] for n in numbers]


def map_column(train_metric: PointwiseMetric, test_metric: PointwiseMetric, direction: Direction) -> str:
    return f"map_{train_metric.short}_{test_metric.short}_{direction.value}"


def class_avg_column(train_metric: PointwiseMetric, test_metric: PointwiseMetric) -> str:
    return f"cavg_{train_metric.short}_{test_metric.short}_both"


@dataclass
class AblationJob:
    """(행, 시드) 1개 작업: 학습 거리마다 모델 1개"""

    row: AblationRow
    seed: int
    data: PairedDataset
    config: TrainConfig
    preset: ArchPreset
    train_metrics: tuple[PointwiseMetric, ...]
    skip_stage1: bool = False


def run_job(job: AblationJob) -> dict:
    """작업 1개 실행 -> CSV 행 dict"""
    base = job.config.stage2.weights
    models = {}
    for train_metric in job.train_metrics:
        stage2 = job.config.stage2.model_copy(update={"weights": job.row.weights(base, train_metric)})
        config = job.config.model_copy(update={
            "stage2": stage2,
            "seed": job.seed + job.row.row,
            "skip_stage1": job.skip_stage1 or job.config.skip_stage1,
        })
        models[train_metric], _ = train(config, job.data, job.preset)

    record = {
        "row": job.row.row,
        "label": job.row.label,
        "seed": job.seed,
        **{flag: int(getattr(job.row, flag)) for flag in ("ce", "pc", "dstc", "cpc", "cdstc")},
    }
    for cell in metric_grid(models, job.data, Split.TEST):
        record[map_column(cell.train_metric, cell.test_metric, cell.direction)] = cell.global_map
        if cell.direction == Direction.BOTH:
            record[class_avg_column(cell.train_metric, cell.test_metric)] = cell.class_avg_map
    _log.info(f"Row {job.row.row} ({job.row.label}) seed {job.seed} 완료")
    return record


def _aggregate(frame: pd.DataFrame) -> pd.DataFrame:
    """행별 mean/std/median 집계 행"""
    value_columns = [c for c in frame.columns if c.startswith(("map_", "cavg_"))]
    rows = []
    for (row, label), group in frame.groupby(["row", "label"], sort=False):
        for how in AGGREGATES:
            stats = getattr(group[value_columns], how)()
            rows.append({
                "row": row,
                "label": label,
                "seed": how,
                **{flag: group[flag].iloc[0] for flag in ("ce", "pc", "dstc", "cpc", "cdstc")},
                **stats.to_dict(),
            })
    return pd.DataFrame(rows, columns=frame.columns)


def run_ablation(
    data: PairedDataset,
    config: TrainConfig,
    preset: ArchPreset,
    rows: Sequence[AblationRow],
    train_metrics: Sequence[PointwiseMetric] = (PointwiseMetric.EUCLIDEAN,),
    seeds: Optional[Sequence[int]] = None,
    skip_stage1: bool = False,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """
    ablation 표 생성

    seeds를 주면 시드마다 데이터를 층화 재분할하고, 시드별 행 뒤에 mean/std/median 집계 행을 붙입니다.
    모델 시드는 (시드 + 행 번호)로 파생하므로 워커 수와 무관하게 결과가 같습니다.
    """
    train_metrics = tuple(dict.fromkeys(PointwiseMetric(m) for m in train_metrics))
    resplit = seeds is not None
    seeds = list(seeds) if seeds is not None else [config.seed]
    if len(set(seeds)) != len(seeds):
        raise DuplicateRowError(f"중복된 시드: {seeds}")

    jobs = [
        AblationJob(
            row=row,
            seed=seed,
            data=data.resplit(seed) if resplit else data,
            config=config,
            preset=preset,
            train_metrics=train_metrics,
            skip_stage1=skip_stage1,
        )
        for seed in seeds
        for row in rows
    ]

    workers = min(workers or settings.DSTC_THREADS, len(jobs))
    _log.info(f"Ablation: rows={[r.row for r in rows]}, seeds={seeds}, train metrics={[m.short for m in train_metrics]}, workers={workers}")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_job, jobs))
    else:
        records = [run_job(job) for job in jobs]

    frame = pd.DataFrame(records)
    if len(seeds) > 1:
        frame = pd.concat([frame, _aggregate(frame)], ignore_index=True)
    return frame
