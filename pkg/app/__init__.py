"""
DSTC 메인 패키지
교차 모달 검색(cross-modal retrieval)을 위한 인코더/분류기/번역기 학습 및 평가
"""

__version__ = "0.1.0"
