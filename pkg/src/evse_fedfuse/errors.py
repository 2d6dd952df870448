"""패키지 공통 예외 정의."""

from __future__ import annotations


class FedFuseError(Exception):
    """evse-fedfuse에서 발생하는 모든 에러의 기반 클래스."""


class ConfigError(FedFuseError):
    """설정 파일 또는 플래그 값이 유효하지 않을 때."""


# --- nn-core ---------------------------------------------------------------


class DimensionError(FedFuseError):
    """텐서 shape이 연산 계약과 맞지 않을 때."""


class KernelSizeError(DimensionError):
    """컨볼루션 커널이 입력 길이보다 길 때."""


class EmptyOutputError(DimensionError):
    """풀링 윈도우가 입력 길이보다 커서 출력이 비게 될 때."""


class LabelError(FedFuseError):
    """라벨 행이 one-hot이 아니거나 범위를 벗어날 때."""


class StateError(FedFuseError):
    """forward 전에 backward를 호출하는 등 호출 순서가 잘못되었을 때."""


class NonFiniteError(FedFuseError):
    """텐서에 NaN/Inf가 포함되었을 때."""


# --- data-ingest -----------------------------------------------------------


class IngestError(FedFuseError):
    """CSV 적재 실패 (빈 파일, 알 수 없는 라벨 등)."""


class PairingError(FedFuseError):
    """두 모달리티의 클래스 집합이 맞지 않아 짝을 지을 수 없을 때."""


class SplitError(FedFuseError):
    """층화 분할이 불가능할 때 (클래스 표본 < 2)."""


class PartitionError(FedFuseError):
    """클라이언트 분할이 불가능할 때."""


# --- training / federation -------------------------------------------------


class TrainingError(FedFuseError):
    """학습 입력이 비어 있거나 학습이 진행될 수 없을 때."""


class AggregationError(FedFuseError):
    """서버 집계 입력이 유효하지 않을 때."""


class ClientError(FedFuseError):
    """특정 클라이언트의 로컬 학습이 실패했을 때."""

    def __init__(self, client_id: int, message: str) -> None:
        super().__init__(f"client {client_id}: {message}")
        self.client_id = client_id


# --- evaluation / io -------------------------------------------------------


class EvaluationError(FedFuseError):
    """평가 입력이 유효하지 않을 때."""


class CheckpointError(FedFuseError):
    """체크포인트 컨테이너를 읽거나 쓸 수 없을 때."""


class ExperimentError(FedFuseError):
    """실험 프로토콜의 한 arm이 실패했을 때."""

    def __init__(self, arm: str, message: str) -> None:
        super().__init__(f"[{arm}] {message}")
        self.arm = arm
