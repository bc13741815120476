"""
데이터 소스 모듈
쌍 데이터셋, 합성 데이터, 가중 샘플러, 바이너리 특징 파일 입출력

모델 파일 입출력(model_store)은 app.domain.model에 의존하므로 직접 import 합니다.
"""

from .dataset import Batch, PairedDataset, stratified_split
from .sampler import WeightedBatchSampler, sampler_weights
from .synthetic import generate_synthetic
from .feature_io import load_dataset, save_dataset

__all__ = [
    "Batch",
    "PairedDataset",
    "stratified_split",
    "WeightedBatchSampler",
    "sampler_weights",
    "generate_synthetic",
    "load_dataset",
    "save_dataset",
]
