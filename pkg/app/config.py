"""
DSTC 설정 관리

모든 설정값은 환경변수 또는 .env 파일에서 관리합니다.
사용법:
    from app.config import settings
    eps = settings.NORMALIZE_EPS
"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """애플리케이션 설정"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",  # .env에 정의되지 않은 변수 무시
    )

    # === 로깅 ===
    LOG_LEVEL: str = "INFO"

    # === 병렬 처리 (ablate 워커 수 상한) ===
    DSTC_THREADS: int = 1

    # === 수치 연산 ===
    NORMALIZE_EPS: float = 1e-12

    # === BatchNorm ===
    BN_MOMENTUM: float = 0.1
    BN_EPS: float = 1e-5

    # === Adam ===
    ADAM_BETA1: float = 0.9
    ADAM_BETA2: float = 0.999
    ADAM_EPS: float = 1e-8

    # === 학습 기본값 ===
    DEFAULT_SEED: int = 7
    DEFAULT_BATCH_SIZE: int = 128
    DEFAULT_EPOCHS: int = 30
    DEFAULT_LR: float = 1e-4
    EARLY_STOP_PATIENCE: int = 10

    # === Gradient check ===
    GRADCHECK_STEP: float = 1e-6
    GRADCHECK_TOLERANCE: float = 1e-5

    # === 파일 포맷 ===
    FEATURE_FORMAT_VERSION: int = 1
    MODEL_FORMAT_VERSION: int = 1


# 싱글톤 인스턴스
settings = Settings()
