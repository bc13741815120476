"""
교차 모달 검색 평가

x2y: 쿼리 E_x(x), 갤러리 T_yx(E_y(y))  (갤러리를 쿼리 모달 공간으로 번역)
y2x: 쿼리 E_y(y), 갤러리 T_xy(E_x(x))
관련성: 쿼리와 갤러리 항목의 클래스가 같으면 관련
"""

from typing import Literal, Optional

import numpy as np
import pandas as pd
from loguru import logger
from numpy.typing import NDArray

from app.data_sources.dataset import PairedDataset
from app.domain.errors import DimensionMismatchError, UndefinedAPError, ZeroNormError
from app.domain.model import DstcModel, embed
from app.domain.tensor_core import DenseMatrix, as_matrix, row_norms, squared_distances
from app.schemas.data import Split
from app.schemas.results import Direction, MetricGridCell, QueryResult, RetrievalReport
from app.schemas.training import PointwiseMetric

AccuracyPath = Literal["x", "y", "x2y", "y2x"]

# 방향별 (쿼리 활성값, 갤러리 활성값)
DIRECTION_ACTIVATIONS = {
    Direction.X2Y: ("ex", "tyx"),
    Direction.Y2X: ("ey", "txy"),
}

# 정확도 경로별 logits 활성값
ACCURACY_LOGITS = {
    "x": "logits_x",
    "y": "logits_y",
    "x2y": "logits_xy",
    "y2x": "logits_yx",
}

_log = logger.bind(component="Retrieval")


# ==================== 점수/순위/AP ====================
def score_matrix(queries: DenseMatrix, gallery: DenseMatrix, metric: PointwiseMetric) -> DenseMatrix:
    """
    쿼리 x 갤러리 점수 행렬 (클수록 가까움)

    euclidean: -||a - b||^2
    cosine: cos(a, b)
    """
    queries = as_matrix(queries, "queries")
    gallery = as_matrix(gallery, "gallery")
    if queries.shape[1] != gallery.shape[1]:
        raise DimensionMismatchError("score", queries.shape, gallery.shape)

    if PointwiseMetric(metric) == PointwiseMetric.COSINE:
        q_norms = row_norms(queries)
        g_norms = row_norms(gallery)
        if np.any(q_norms == 0) or np.any(g_norms == 0):
            raise ZeroNormError("cosine 점수: 노름이 0인 벡터가 있습니다.")
        return (queries / q_norms) @ (gallery / g_norms).T

    return -squared_distances(queries, gallery)


def score(query: DenseMatrix, gallery: DenseMatrix, metric: PointwiseMetric) -> NDArray[np.float64]:
    """쿼리 1개의 갤러리 점수 벡터"""
    return score_matrix(query, gallery, metric)[0]


def rank(scores: NDArray[np.float64]) -> NDArray[np.int64]:
    """점수 내림차순 순열 (동점은 갤러리 인덱스 오름차순)"""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("rank: 빈 점수 벡터")
    if np.any(np.isnan(scores)):
        raise ValueError("rank: 점수에 NaN이 있습니다.")
    return np.argsort(-scores, kind="stable")


def average_precision(ranking: NDArray[np.int64], relevance: NDArray[np.bool_]) -> float:
    """
    전체 갤러리 기준 AP

    AP = 관련 항목 순위 r마다 (상위 r개 중 관련 수 / r) 의 평균

    Args:
        ranking: 갤러리 인덱스 순열 (rank 결과)
        relevance: 갤러리 인덱스별 관련 여부

    Raises:
        UndefinedAPError: 관련 항목이 없을 때
    """
    ranking = np.asarray(ranking)
    relevance = np.asarray(relevance, dtype=bool)
    if ranking.shape != relevance.shape:
        raise DimensionMismatchError("average_precision", ranking.shape, relevance.shape)

    ranked = relevance[ranking]
    positives = int(ranked.sum())
    if positives == 0:
        raise UndefinedAPError("관련 항목이 없어 AP를 정의할 수 없습니다.")

    hits = np.cumsum(ranked)
    positions = np.flatnonzero(ranked) + 1
    return float(np.sum(hits[ranked] / positions) / positives)


# ==================== 리포트 ====================
def build_report(
    direction: Direction,
    metric: PointwiseMetric,
    queries: list[QueryResult],
    gallery_size: int,
) -> RetrievalReport:
    """쿼리별 AP로 global / class-avg mAP를 계산합니다."""
    frame = pd.DataFrame([q.model_dump() for q in queries])
    included = frame[~frame["excluded"]] if not frame.empty else frame

    if included.empty:
        global_map, class_avg, per_class = 0.0, 0.0, {}
    else:
        aps = included.assign(ap=included["ap"].astype(float))
        global_map = float(aps["ap"].mean())
        per_class_series = aps.groupby("query_class")["ap"].mean()
        per_class = {int(c): float(v) for c, v in per_class_series.items()}
        class_avg = float(per_class_series.mean())

    return RetrievalReport(
        direction=direction,
        metric=metric,
        queries=queries,
        global_map=global_map,
        class_avg_map=class_avg,
        per_class_map=per_class,
        excluded_count=int(frame["excluded"].sum()) if not frame.empty else 0,
        gallery_size=gallery_size,
        gallery_sizes={direction: gallery_size},
    )


def retrieve(
    query_embs: DenseMatrix,
    query_labels: NDArray[np.int64],
    gallery_embs: DenseMatrix,
    gallery_labels: NDArray[np.int64],
    direction: Direction,
    metric: PointwiseMetric,
) -> RetrievalReport:
    """임베딩이 준비된 상태에서 쿼리마다 전체 갤러리를 순위화합니다."""
    scores = score_matrix(query_embs, gallery_embs, metric)
    gallery_classes = set(np.unique(gallery_labels).tolist())

    results = []
    for i, query_class in enumerate(query_labels.tolist()):
        if query_class not in gallery_classes:
            results.append(QueryResult(index=i, query_class=query_class, direction=direction, excluded=True))
            continue
        ap = average_precision(rank(scores[i]), gallery_labels == query_class)
        results.append(QueryResult(index=i, query_class=query_class, direction=direction, ap=ap))

    report = build_report(direction, metric, results, gallery_size=len(gallery_labels))
    if report.excluded_count:
        _log.warning(
            f"{direction.value}: 갤러리에 클래스가 없는 쿼리 {report.excluded_count}개를 mAP에서 제외했습니다."
        )
    return report


def combine_reports(x2y: RetrievalReport, y2x: RetrievalReport) -> RetrievalReport:
    """both 리포트: 두 방향 mAP의 평균"""
    return RetrievalReport(
        direction=Direction.BOTH,
        metric=x2y.metric,
        queries=x2y.queries + y2x.queries,
        global_map=(x2y.global_map + y2x.global_map) / 2,
        class_avg_map=(x2y.class_avg_map + y2x.class_avg_map) / 2,
        per_class_map={
            c: float(np.mean([r.per_class_map[c] for r in (x2y, y2x) if c in r.per_class_map]))
            for c in sorted(set(x2y.per_class_map) | set(y2x.per_class_map))
        },
        excluded_count=x2y.excluded_count + y2x.excluded_count,
        gallery_size=x2y.gallery_size,
        gallery_sizes={**x2y.gallery_sizes, **y2x.gallery_sizes},
    )


def evaluate(
    model: DstcModel,
    data: PairedDataset,
    split: Split = Split.TEST,
    direction: Direction = Direction.BOTH,
    metric: PointwiseMetric = PointwiseMetric.COSINE,
) -> RetrievalReport:
    """
    split 전체를 쿼리/갤러리로 검색 평가 (eval 모드 forward만 사용)

    Raises:
        EmptySplitError: split이 비어 있을 때
    """
    direction = Direction(direction)
    metric = PointwiseMetric(metric)
    subset = data.subset(Split(split))
    bundle = embed(model, subset.batch(np.arange(subset.n)))
    return evaluate_values(bundle.values, subset.labels, direction, metric)


def evaluate_values(
    values: dict[str, DenseMatrix],
    labels: NDArray[np.int64],
    direction: Direction,
    metric: PointwiseMetric,
) -> RetrievalReport:
    """eval 모드 활성값(embed 결과)으로 검색 평가"""
    if direction == Direction.BOTH:
        return combine_reports(
            evaluate_values(values, labels, Direction.X2Y, metric),
            evaluate_values(values, labels, Direction.Y2X, metric),
        )
    query_name, gallery_name = DIRECTION_ACTIVATIONS[direction]
    return retrieve(values[query_name], labels, values[gallery_name], labels, direction, metric)


def evaluate_all(
    model: DstcModel,
    data: PairedDataset,
    split: Split = Split.VAL,
    metrics: tuple[PointwiseMetric, ...] = (PointwiseMetric.COSINE, PointwiseMetric.EUCLIDEAN),
) -> dict[tuple[PointwiseMetric, Direction], RetrievalReport]:
    """
    forward 1회로 모든 (거리, 방향) 조합을 평가합니다.

    Args:
        model: 평가할 모델 (eval 모드 forward만 사용)
        data: 데이터셋
        split: 쿼리와 갤러리를 모두 이 split에서 가져옴
        metrics: 평가 거리 목록

    Returns:
        (거리, 방향) -> RetrievalReport. 방향은 x2y, y2x, both 3개

    Raises:
        EmptySplitError: split이 비어 있을 때
    """
    subset = data.subset(Split(split))
    bundle = embed(model, subset.batch(np.arange(subset.n)))
    reports = {}
    for metric in metrics:
        x2y = evaluate_values(bundle.values, subset.labels, Direction.X2Y, metric)
        y2x = evaluate_values(bundle.values, subset.labels, Direction.Y2X, metric)
        reports[(metric, Direction.X2Y)] = x2y
        reports[(metric, Direction.Y2X)] = y2x
        reports[(metric, Direction.BOTH)] = combine_reports(x2y, y2x)
    return reports


def metric_grid(
    models: dict[PointwiseMetric, DstcModel],
    data: PairedDataset,
    split: Split = Split.TEST,
) -> list[MetricGridCell]:
    """
    (학습 거리) x (평가 거리) x (방향) mAP 표

    Args:
        models: 학습 거리별로 학습한 모델
        data: 데이터셋
        split: 평가 split

    Returns:
        학습 거리마다 2(평가 거리) x 3(방향) 칸
    """
    cells = []
    for train_metric, model in models.items():
        reports = evaluate_all(model, data, split)
        for test_metric in (PointwiseMetric.EUCLIDEAN, PointwiseMetric.COSINE):
            for direction in (Direction.X2Y, Direction.Y2X, Direction.BOTH):
                report = reports[(test_metric, direction)]
                cells.append(MetricGridCell(
                    train_metric=train_metric,
                    test_metric=test_metric,
                    direction=direction,
                    global_map=report.global_map,
                    class_avg_map=report.class_avg_map,
                ))
    return cells


# ==================== 분류 정확도 ====================
def classification_accuracy(
    model: DstcModel,
    data: PairedDataset,
    split: Split = Split.VAL,
    path: AccuracyPath = "x",
    values: Optional[dict[str, DenseMatrix]] = None,
) -> float:
    """
    분류 정확도

    x: C_x(E_x(x)), y: C_y(E_y(y)), x2y: C_y(T_xy(E_x(x))), y2x: C_x(T_yx(E_y(y)))

    Args:
        path: 위 4개 경로 중 하나
        values: split에 대해 이미 계산한 eval 모드 활성값 (없으면 forward 1회)

    Returns:
        argmax 예측이 레이블과 같은 비율 (0~1)
    """
    if path not in ACCURACY_LOGITS:
        raise ValueError(f"알 수 없는 경로: {path}")
    subset = data.subset(Split(split))
    if values is None:
        values = embed(model, subset.batch(np.arange(subset.n))).values
    predicted = np.argmax(values[ACCURACY_LOGITS[path]], axis=1)
    return float(np.mean(predicted == subset.labels))


# ==================== 출력 ====================
def direction_maps(report: RetrievalReport) -> dict[Direction, float]:
    """리포트 쿼리에서 방향별 mAP를 다시 계산합니다 (both 리포트는 both 값도 포함)."""
    frame = queries_frame(report)
    included = frame[~frame["excluded"].astype(bool)]
    maps = {
        Direction(direction): float(value)
        for direction, value in included.assign(ap=included["ap"].astype(float)).groupby("direction")["ap"].mean().items()
    }
    maps[report.direction] = report.global_map
    return maps


def render_summary(reports: list[RetrievalReport]) -> str:
    """리포트 요약 텍스트 (방향, 거리, mAP, class-avg mAP, 클래스별 표)"""
    lines = []
    for report in reports:
        lines.append(
            f"[{report.direction.value} / {report.metric.short}] "
            f"mAP={report.global_map:.4f}  class-avg mAP={report.class_avg_map:.4f}  "
            f"queries={len(report.queries)}  excluded={report.excluded_count}"
        )
        if report.direction == Direction.BOTH:
            maps = direction_maps(report)
            lines.append(
                f"    x2y mAP={maps.get(Direction.X2Y, 0.0):.4f}  y2x mAP={maps.get(Direction.Y2X, 0.0):.4f}  "
                f"both mAP={report.global_map:.4f}"
            )
        for c, value in sorted(report.per_class_map.items()):
            lines.append(f"    class {c:>3}: {value:.4f}")
    return "\n".join(lines)


def queries_frame(report: RetrievalReport) -> pd.DataFrame:
    """쿼리별 CSV 행 (index, class, direction, ap, excluded)"""
    return pd.DataFrame(
        [
            {
                "index": q.index,
                "class": q.query_class,
                "direction": q.direction.value,
                "ap": q.ap,
                "excluded": q.excluded,
            }
            for q in report.queries
        ],
        columns=["index", "class", "direction", "ap", "excluded"],
    )
