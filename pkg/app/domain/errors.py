"""
도메인 예외
모든 모듈이 공유하는 예외 계층입니다.
검증 실패는 ValueError, 파일 포맷 오류는 OSError 계열로도 잡을 수 있습니다.
"""


class DstcError(Exception):
    """DSTC 예외 최상위 클래스"""


# === 수치/형상 오류 ===
class DimensionMismatchError(DstcError, ValueError):
    """행렬/배치 차원 불일치"""

    def __init__(self, op: str, *shapes: tuple):
        self.op = op
        self.shapes = shapes
        shape_text = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: 차원 불일치 {shape_text}")


class BatchTooSmallError(DstcError, ValueError):
    """BatchNorm 학습 모드에서 배치 크기 < 2"""


class CacheMismatchError(DstcError, ValueError):
    """ForwardCache가 네트워크와 맞지 않거나 eval 모드 캐시"""


class NonFiniteGradientError(DstcError, ValueError):
    """NaN/Inf 그래디언트 (학습 중단)"""


class NonFiniteLossError(DstcError, ValueError):
    """NaN/Inf 손실값 (학습 중단)"""


class InvalidLabelError(DstcError, ValueError):
    """one-hot이 아니거나 범위를 벗어난 레이블"""


class ZeroNormError(DstcError, ValueError):
    """코사인 점수 계산 시 노름이 0인 벡터"""


class UndefinedAPError(DstcError, ValueError):
    """관련 항목이 하나도 없어 AP를 정의할 수 없음"""


class EmptySplitError(DstcError, ValueError):
    """빈 split 또는 빈 배치"""


class DuplicateRowError(DstcError, ValueError):
    """ablation 행 중복 지정"""


class ConfigError(DstcError, ValueError):
    """설정 파일/플래그 오류"""


class ModelShapeMismatchError(DstcError, ValueError):
    """모델 파일과 기대 형상 불일치"""


# === 파일 포맷 오류 ===
class FeatureFileError(DstcError, OSError):
    """바이너리 파일 포맷 오류 기본 클래스"""

    def __init__(self, path, message: str):
        self.path = str(path)
        super().__init__(f"{self.path}: {message}")


class BadMagicError(FeatureFileError):
    """매직 바이트 불일치"""


class VersionMismatchError(FeatureFileError):
    """지원하지 않는 포맷 버전"""


class TruncatedFileError(FeatureFileError):
    """헤더 또는 페이로드가 잘림"""


class HeaderInconsistencyError(FeatureFileError):
    """헤더 값과 페이로드 크기/내용 불일치"""
