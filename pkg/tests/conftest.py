"""공용 fixture: 작은 모델, 작은 합성 데이터셋, 구조 프리셋"""

import numpy as np
import pytest
from loguru import logger

from app.data_sources.dataset import Batch, PairedDataset
from app.data_sources.synthetic import generate_synthetic
from app.domain.model import DstcModel
from app.domain.nn_layers import init_mlp
from app.schemas.architecture import ArchPreset, SubnetArch
from app.schemas.data import SyntheticSpec

D1, D2, EMBED, CLASSES = 6, 5, 4, 3


@pytest.fixture(autouse=True)
def _quiet_logs():
    logger.remove()
    yield


def make_model(seed: int = 0) -> DstcModel:
    return DstcModel(
        e_x=init_mlp([D1, 8, EMBED], True, seed=seed),
        e_y=init_mlp([D2, 8, EMBED], True, seed=seed + 1),
        c_x=init_mlp([EMBED, CLASSES], seed=seed + 2),
        c_y=init_mlp([EMBED, CLASSES], seed=seed + 3),
        t_xy=init_mlp([EMBED, 6, EMBED], True, seed=seed + 4),
        t_yx=init_mlp([EMBED, 6, EMBED], True, seed=seed + 5),
    )


@pytest.fixture
def model() -> DstcModel:
    return make_model()


@pytest.fixture
def batch() -> Batch:
    rng = np.random.default_rng(11)
    return Batch(
        x=rng.standard_normal((8, D1)),
        y=rng.standard_normal((8, D2)),
        labels=np.array([0, 1, 2, 0, 1, 2, 0, 1]),
        num_classes=CLASSES,
    )


@pytest.fixture
def dataset() -> PairedDataset:
    return generate_synthetic(SyntheticSpec(num_classes=CLASSES, n_per_class=20, d1=D1, d2=D2, seed=3))


@pytest.fixture
def tiny_preset() -> ArchPreset:
    return ArchPreset(
        name="custom",
        e_x=SubnetArch(dims=[D1, 8, EMBED]),
        e_y=SubnetArch(dims=[D2, 8, EMBED]),
        c_x=SubnetArch(dims=[EMBED, CLASSES]),
        c_y=SubnetArch(dims=[EMBED, CLASSES]),
        t_xy=SubnetArch(dims=[EMBED, 6, EMBED]),
        t_yx=SubnetArch(dims=[EMBED, 6, EMBED]),
    )


@pytest.fixture
def model_factory():
    return make_model
