import numpy as np
import pytest

from app.data_sources.synthetic import generate_synthetic
from app.domain.errors import DimensionMismatchError
from app.domain.model import build_model, model_checksums
from app.domain.presets import preset_defaults
from app.domain.retrieval import evaluate
from app.pipeline.trainer import train, train_stage1, train_stage2, validate
from app.schemas.architecture import ArchPreset, SubnetArch
from app.schemas.data import Split, SyntheticSpec
from app.schemas.results import Direction
from app.schemas.training import LossWeights, PointwiseMetric, Stage2Config, StageConfig, Subnet, TrainConfig


def small_config(**overrides) -> TrainConfig:
    values = {
        "stage1": StageConfig(epochs=4, lr=1e-2, batch_size=8),
        "stage2": Stage2Config(epochs=3, lr=1e-3, batch_size=8, weights=LossWeights()),
        "seed": 0,
    }
    values.update(overrides)
    return TrainConfig(**values)


@pytest.fixture
def fresh_model(tiny_preset, dataset):
    return build_model(tiny_preset, dataset.num_classes, dataset.d1, dataset.d2, seed=0)


def test_stage1_freezes_translators(fresh_model, dataset):
    before = model_checksums(fresh_model)
    model, history = train_stage1(fresh_model, dataset, small_config())
    after = model_checksums(model)
    assert after[Subnet.T_XY] == before[Subnet.T_XY]
    assert after[Subnet.T_YX] == before[Subnet.T_YX]
    assert after[Subnet.C_X] != before[Subnet.C_X]
    assert {r.stage for r in history.steps} == {1}
    assert all(r.total == pytest.approx(r.ce) for r in history.steps)


def test_stage2_freezes_classifiers(fresh_model, dataset):
    before = model_checksums(fresh_model)
    model, _ = train_stage2(fresh_model, dataset, small_config(early_stop=False))
    after = model_checksums(model)
    assert after[Subnet.C_X] == before[Subnet.C_X]
    assert after[Subnet.C_Y] == before[Subnet.C_Y]
    assert after[Subnet.T_XY] != before[Subnet.T_XY]


def test_stage1_reduces_classification_loss(fresh_model, dataset):
    config = small_config(stage1=StageConfig(epochs=20, lr=1e-2, batch_size=8))
    _, history = train_stage1(fresh_model, dataset, config)
    first = np.mean([r.ce for r in history.steps if r.epoch == 1])
    last = np.mean([r.ce for r in history.steps if r.epoch == 20])
    assert last < first


def test_history_has_one_epoch_record_per_epoch(tiny_preset, dataset):
    config = small_config(early_stop=False)
    _, history = train(config, dataset, tiny_preset)
    assert [(r.stage, r.epoch) for r in history.epochs] == [(1, e) for e in range(1, 5)] + [(2, e) for e in range(1, 4)]
    steps = [r.step for r in history.stage_steps(2)]
    assert steps == list(range(1, len(steps) + 1))
    assert history.best_epoch is None


def test_same_seed_same_model(tiny_preset, dataset):
    a, _ = train(small_config(), dataset, tiny_preset)
    b, _ = train(small_config(), dataset, tiny_preset)
    assert model_checksums(a) == model_checksums(b)


def test_skip_stage1(tiny_preset, dataset):
    _, history = train(small_config(skip_stage1=True), dataset, tiny_preset)
    assert {r.stage for r in history.steps} == {2}


def test_early_stopping_restores_best_epoch(tiny_preset, dataset):
    config = small_config(stage2=Stage2Config(epochs=6, lr=5e-2, batch_size=8), patience=1)
    model, history = train(config, dataset, tiny_preset)
    stage2 = history.stage_epochs(2)
    best = max(stage2, key=lambda r: r.val_map_both)
    assert history.best_epoch == best.epoch
    assert validate(model, dataset, 2, best.epoch).val_map_both == pytest.approx(best.val_map_both)


def test_dimension_mismatch(fresh_model):
    other = generate_synthetic(SyntheticSpec(num_classes=3, n_per_class=10, d1=7, d2=5))
    with pytest.raises(DimensionMismatchError):
        train_stage1(fresh_model, other, small_config())


def test_stage2_keeps_classifier_batchnorm_stats_frozen(tiny_preset, dataset):
    classifier = SubnetArch(dims=[4, 5, 3])
    preset = tiny_preset.model_copy(update={"c_x": classifier, "c_y": classifier})
    model = build_model(preset, dataset.num_classes, dataset.d1, dataset.d2, seed=0)
    assert model.c_x.has_batchnorm and model.c_y.has_batchnorm

    before = model_checksums(model)
    model, _ = train_stage2(model, dataset, small_config(early_stop=False))
    after = model_checksums(model)
    assert after[Subnet.C_X] == before[Subnet.C_X]
    assert after[Subnet.C_Y] == before[Subnet.C_Y]

    _, history = train(small_config(), dataset, preset)
    assert {r.stage for r in history.steps} == {1, 2}


def test_same_seed_same_loss_trace(tiny_preset, dataset):
    config = small_config(stage1=StageConfig(epochs=30, lr=1e-2, batch_size=8))
    a, first = train(config, dataset, tiny_preset)
    b, second = train(config, dataset, tiny_preset)
    assert len(first.steps) >= 100
    assert [r.model_dump() for r in first.steps[:100]] == [r.model_dump() for r in second.steps[:100]]
    report_a = evaluate(a, dataset, Split.TEST, Direction.BOTH, PointwiseMetric.COSINE)
    report_b = evaluate(b, dataset, Split.TEST, Direction.BOTH, PointwiseMetric.COSINE)
    assert report_a.global_map == report_b.global_map


@pytest.mark.slow
def test_synthetic_end_to_end():
    data = generate_synthetic(
        SyntheticSpec(num_classes=10, n_per_class=200, d1=64, d2=48, cluster_spread=0.15, pair_noise=0.0, seed=7)
    )
    model, history = train(preset_defaults("audioset", seed=7), data, ArchPreset(name="audioset"))

    stage1 = history.stage_epochs(1)[-1]
    assert stage1.val_acc_x >= 0.95
    assert stage1.val_acc_y >= 0.95
    assert evaluate(model, data, Split.TEST, Direction.BOTH, PointwiseMetric.COSINE).global_map >= 0.90
