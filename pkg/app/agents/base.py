"""
Agent 기본 클래스
학습, 평가, 리포트 단계가 공통으로 쓰는 실행 골격입니다.
"""

import time
from abc import ABC, abstractmethod
from typing import Generic, TypeVar

from loguru import logger

InputT = TypeVar("InputT")
OutputT = TypeVar("OutputT")


class BaseAgent(ABC, Generic[InputT, OutputT]):
    """
    단계 실행 골격: 입력 검증 -> _process -> 출력 검증

    실패는 agent 이름, 예외 타입, 경과 시간과 함께 ERROR로 남기고 다시 던집니다.
    호출 쪽(오케스트레이터, CLI)이 종료 코드를 결정합니다.
    """

    name: str = "BaseAgent"

    def __init__(self):
        self.logger = logger.bind(agent=self.name)

    def run(self, input_data: InputT) -> OutputT:
        started = time.perf_counter()
        self.logger.debug(f"{self.name} 시작")
        try:
            self._validate_input(input_data)
            result = self._process(input_data)
            self._validate_output(result)
        except Exception as e:
            elapsed = time.perf_counter() - started
            self.logger.error(f"{self.name} 실패 ({elapsed:.2f}s): {type(e).__name__}: {e}")
            raise

        self.logger.debug(f"{self.name} 완료 ({time.perf_counter() - started:.2f}s)")
        return result

    @abstractmethod
    def _process(self, input_data: InputT) -> OutputT:
        ...

    def _validate_input(self, input_data: InputT) -> None:
        if input_data is None:
            raise ValueError(f"{self.name}: 입력이 없습니다.")

    def _validate_output(self, output_data: OutputT) -> None:
        if output_data is None:
            raise ValueError(f"{self.name}: 결과가 없습니다.")
