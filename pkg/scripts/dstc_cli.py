#!/usr/bin/env python
"""
DSTC 교차 모달 검색 CLI

사용법:
    python scripts/dstc_cli.py synth --classes 10 --n-per-class 200 --dx 64 --dy 48 --seed 7 --out data/
    python scripts/dstc_cli.py train --config cfg.json --data data/manifest --out run1/
    python scripts/dstc_cli.py eval --model run1/model.bin --data data/manifest --direction both --metric euc,cos
    python scripts/dstc_cli.py ablate --data data/manifest --rows 1,2,5 --train-metrics euc --out ablation/
    python scripts/dstc_cli.py gradcheck --dims 8 --batch 4 --trials 20

종료 코드: 0 성공, 1 gradient check 실패, 2 설정 오류, 3 파일 오류, 4 수치 오류
"""

import argparse
import sys
from pathlib import Path
from typing import Optional

# 프로젝트 루트를 path에 추가
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from loguru import logger
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from app.config import settings
from app.domain.errors import ConfigError, DstcError, DuplicateRowError
from app.domain.presets import preset_defaults
from app.domain.retrieval import direction_maps
from app.pipeline.ablation import parse_rows
from app.pipeline.orchestrator import PipelineOrchestrator
from app.schemas.architecture import ArchPreset, PresetName
from app.schemas.data import Split, SyntheticSpec
from app.schemas.results import Direction, RetrievalReport
from app.schemas.run_config import RunConfig
from app.schemas.training import LossWeights, PointwiseMetric

EXIT_OK = 0
EXIT_GRADCHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

console = Console()


# ==================== 인자 해석 ====================
def parse_metrics(text: str) -> list[PointwiseMetric]:
    """'euc,cos' -> [EUCLIDEAN, COSINE] (중복 제거, 순서 유지)"""
    try:
        metrics = [PointwiseMetric.parse(part) for part in text.split(",") if part.strip()]
    except (KeyError, ValueError) as e:
        raise ConfigError(f"알 수 없는 거리: '{text}' (euc, cos)") from e
    if not metrics:
        raise ConfigError("거리 목록이 비어 있습니다.")
    return list(dict.fromkeys(metrics))


def parse_seeds(text: Optional[str]) -> Optional[list[int]]:
    if text is None:
        return None
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"--seeds 형식 오류: '{text}'") from e


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """
    JSON 설정 + CLI 플래그 덮어쓰기

    설정 파일이 없으면 프리셋 기본값(preset_defaults)에서 시작합니다.
    """
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"설정 파일이 없습니다: {path}")
        config = RunConfig.model_validate_json(path.read_text(encoding="utf-8"))
    else:
        name = PresetName(args.preset or PresetName.AUDIOSET)
        config = RunConfig(train=preset_defaults(name), preset=ArchPreset(name=name))

    train = config.train
    if args.preset and args.config:
        config = config.model_copy(update={"preset": ArchPreset(name=args.preset)})
    if args.seed is not None:
        train = train.model_copy(update={"seed": args.seed})
    if args.no_stage1:
        train = train.model_copy(update={"skip_stage1": True})
    if getattr(args, "epochs", None) is not None:
        train = train.model_copy(update={
            "stage1": train.stage1.model_copy(update={"epochs": args.epochs}),
            "stage2": train.stage2.model_copy(update={"epochs": args.epochs}),
        })
    if getattr(args, "stage2_weights", None):
        current = train.stage2.weights
        try:
            weights = LossWeights.from_csv(args.stage2_weights, current.pointwise_metric)
        except ValueError as e:
            raise ConfigError(f"--stage2-weights: {e}") from e
        weights = weights.model_copy(update={"ce_weight": current.ce_weight})
        train = train.model_copy(update={"stage2": train.stage2.model_copy(update={"weights": weights})})

    # model_copy는 검증을 건너뛰므로 한 번 더 검증
    config = RunConfig.model_validate({**config.model_dump(), "train": train.model_dump()})

    data = Path(args.data) if args.data else config.data
    out = Path(args.out) if args.out else config.out
    if data is None:
        raise ConfigError("데이터 매니페스트 경로가 필요합니다 (--data 또는 설정의 data).")
    if out is None:
        raise ConfigError("출력 디렉터리가 필요합니다 (--out 또는 설정의 out).")
    return config.model_copy(update={"data": data, "out": out})


# ==================== 출력 ====================
def print_reports(reports: list[RetrievalReport]) -> None:
    table = Table(title="검색 평가 (mAP)")
    table.add_column("direction")
    table.add_column("metric")
    table.add_column("mAP", justify="right")
    table.add_column("class-avg mAP", justify="right")
    table.add_column("queries", justify="right")
    table.add_column("excluded", justify="right")
    for report in reports:
        if report.direction == Direction.BOTH:
            maps = direction_maps(report)
            for direction in (Direction.X2Y, Direction.Y2X):
                table.add_row(direction.value, report.metric.short, f"{maps.get(direction, 0.0):.4f}", "", "", "")
        table.add_row(
            report.direction.value,
            report.metric.short,
            f"{report.global_map:.4f}",
            f"{report.class_avg_map:.4f}",
            str(len(report.queries)),
            str(report.excluded_count),
        )
    console.print(table)


# ==================== 명령 ====================
def cmd_synth(args: argparse.Namespace, pipeline: PipelineOrchestrator) -> int:
    spec = SyntheticSpec(
        num_classes=args.classes,
        n_per_class=args.n_per_class,
        d1=args.dx,
        d2=args.dy,
        cluster_spread=args.spread,
        pair_noise=args.pair_noise,
        seed=args.seed,
    )
    manifest = pipeline.synth(spec, Path(args.out))
    console.print(f"📦 매니페스트: {manifest}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace, pipeline: PipelineOrchestrator) -> int:
    config = load_run_config(args)
    run = pipeline.train(config, config.data, config.out)

    console.print(f"📦 모델: {run.model_path}")
    console.print(f"📈 이력: {run.artifacts.history_csv}")
    if run.artifacts.summary:
        console.print(run.artifacts.summary)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, pipeline: PipelineOrchestrator) -> int:
    try:
        direction = Direction(args.direction)
        split = Split.parse(args.split)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"인자 오류: {e}") from e

    reports = pipeline.evaluate(
        Path(args.model),
        Path(args.data),
        directions=[direction],
        metrics=parse_metrics(args.metric),
        split=split,
        out_dir=Path(args.out) if args.out else None,
    )
    print_reports(reports)
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace, pipeline: PipelineOrchestrator) -> int:
    config = load_run_config(args)
    rows = parse_rows(args.rows)
    train_metrics = parse_metrics(args.train_metrics)

    table, path = pipeline.ablate(
        config,
        config.data,
        rows,
        train_metrics,
        config.out,
        seeds=parse_seeds(args.seeds),
        skip_stage1=args.no_stage1,
    )

    view = Table(title=f"Ablation ({path})")
    shown = ["row", "label", "seed"] + [c for c in table.columns if c.startswith("map_") and c.endswith("_both")]
    for column in shown:
        view.add_column(column)
    for record in table[shown].itertuples(index=False):
        view.add_row(*[f"{v:.4f}" if isinstance(v, float) else str(v) for v in record])
    console.print(view)
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace, pipeline: PipelineOrchestrator) -> int:
    report = pipeline.gradcheck(
        dims=args.dims,
        batch=args.batch,
        trials=args.trials,
        seed=args.seed,
        perturb_bug=args.perturb_bug,
    )
    console.print(
        f"dims={report.dims} batch={report.batch} trials={report.trials} "
        f"tensors={len(report.entries)} entries={report.compared} kinks={report.kinks} "
        f"max rel error={report.max_rel_error:.3e} (tol {report.tolerance:.0e})"
    )
    if report.passed:
        console.print("✅ gradient check 통과")
        return EXIT_OK

    table = Table(title="gradient check 실패")
    for column in ("trial", "loss", "subnet", "param", "rel error"):
        table.add_column(column)
    for entry in report.failures[:20]:
        table.add_row(str(entry.trial), entry.loss, entry.subnet, entry.param, f"{entry.rel_error:.3e}")
    console.print(table)
    return EXIT_GRADCHECK_FAILED


# ==================== 파서 ====================
def _add_run_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON 실행 설정 파일")
    parser.add_argument("--data", help="데이터셋 매니페스트 경로")
    parser.add_argument("--out", help="출력 디렉터리")
    parser.add_argument("--preset", choices=[p.value for p in PresetName], help="구조 프리셋")
    parser.add_argument("--seed", type=int, help="난수 시드")
    parser.add_argument("--epochs", type=int, help="두 단계 공통 에폭 수")
    parser.add_argument("--no-stage1", action="store_true", help="1단계(CE) 학습 생략")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dstc", description="DSTC 교차 모달 검색 학습/평가")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="합성 쌍 데이터셋 생성")
    synth.add_argument("--classes", type=int, required=True)
    synth.add_argument("--n-per-class", type=int, required=True)
    synth.add_argument("--dx", type=int, required=True)
    synth.add_argument("--dy", type=int, required=True)
    synth.add_argument("--spread", type=float, default=0.15, help="클러스터 표준편차")
    synth.add_argument("--pair-noise", type=float, default=0.0, help="클래스 내 재매칭 비율")
    synth.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    synth.add_argument("--out", required=True)
    synth.set_defaults(handler=cmd_synth)

    train = sub.add_parser("train", help="2단계 학습")
    _add_run_config_args(train)
    train.add_argument("--stage2-weights", help="alpha,beta,gamma,delta (예: 1,1,0,0)")
    train.set_defaults(handler=cmd_train)

    evaluate = sub.add_parser("eval", help="저장된 모델 검색 평가")
    evaluate.add_argument("--model", required=True)
    evaluate.add_argument("--data", required=True)
    evaluate.add_argument("--direction", default="both", choices=[d.value for d in Direction])
    evaluate.add_argument("--metric", default="cos", help="euc, cos 또는 euc,cos")
    evaluate.add_argument("--split", default="test", choices=[s.name.lower() for s in Split])
    evaluate.add_argument("--out", help="리포트 CSV/요약 저장 디렉터리")
    evaluate.set_defaults(handler=cmd_eval)

    ablate = sub.add_parser("ablate", help="손실 조합 ablation 표")
    _add_run_config_args(ablate)
    ablate.add_argument("--rows", default="1,2,3,4,5,6,7,8,9,10", help="ablation 행 번호 (예: 1,2,5)")
    ablate.add_argument("--train-metrics", default="euc", help="학습 거리 (euc, cos 또는 euc,cos)")
    ablate.add_argument("--seeds", help="반복 분할 시드 (예: 1,2,3)")
    ablate.set_defaults(handler=cmd_ablate)

    gradcheck = sub.add_parser("gradcheck", help="유한 차분 gradient check")
    gradcheck.add_argument("--dims", type=int, default=8)
    gradcheck.add_argument("--batch", type=int, default=4)
    gradcheck.add_argument("--trials", type=int, default=20)
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--perturb-bug", action="store_true", help=argparse.SUPPRESS)
    gradcheck.set_defaults(handler=cmd_gradcheck)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    logger.remove()
    logger.add(sys.stderr, level=settings.LOG_LEVEL)

    try:
        return args.handler(args, PipelineOrchestrator())
    except (ConfigError, DuplicateRowError, ValidationError) as e:
        logger.error(f"설정 오류: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"파일 오류: {e}")
        return EXIT_IO
    except (DstcError, RuntimeError) as e:
        logger.error(f"수치 오류: {type(e).__name__}: {e}")
        return EXIT_NUMERIC
    except ValueError as e:
        logger.error(f"인자 오류: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
