"""공격 클래스, 모달리티, CSV 스키마 정의 모듈."""

from __future__ import annotations

from enum import Enum, IntEnum

from pydantic import BaseModel, Field


class AttackClass(IntEnum):
    """탐지 대상 클래스.

    BENIGN: 정상 트래픽/커널 이벤트
    DOS: 서비스 거부 공격 (flood 계열)
    RECON: 정찰 (포트/서비스/OS 스캔)
    """

    BENIGN = 0
    DOS = 1
    RECON = 2

    @property
    def display_name(self) -> str:
        return {0: "Benign", 1: "DoS", 2: "Recon"}[self.value]


N_CLASSES = len(AttackClass)
CLASS_NAMES = [c.display_name for c in AttackClass]


class Modality(str, Enum):
    """텔레메트리 종류. 융합 순서는 정의 순서(네트워크 → 커널)를 따른다."""

    NETWORK = "network"
    KERNEL = "kernel"


class CsvSchema(BaseModel):
    """CSV 특성 테이블 해석 규칙."""

    label_column: str = "Scenario"
    feature_columns: list[str] | None = Field(
        default=None, description="None이면 라벨/제외 열을 뺀 숫자 열 전체"
    )
    label_value_map: dict[str, int] = Field(default_factory=dict)
    skip_labels: list[str] = Field(
        default_factory=list, description="3-class 과제에서 제외할 라벨 값"
    )
    drop_columns: list[str] = Field(default_factory=list)


def get_default_label_map() -> dict[str, int]:
    """CICEVSE2024 표기와 흔한 변형을 클래스 번호로 매핑한다."""
    return {
        "Benign": AttackClass.BENIGN,
        "benign": AttackClass.BENIGN,
        "BENIGN": AttackClass.BENIGN,
        "DoS": AttackClass.DOS,
        "dos": AttackClass.DOS,
        "DOS": AttackClass.DOS,
        "Recon": AttackClass.RECON,
        "recon": AttackClass.RECON,
        "Reconnaissance": AttackClass.RECON,
    }


def get_skipped_labels() -> list[str]:
    """3-class 과제에 포함되지 않는 시나리오 라벨."""
    return ["Cryptojacking", "cryptojacking", "Backdoor", "backdoor"]


def get_non_feature_columns() -> list[str]:
    """특성으로 쓰지 않는 메타데이터 열."""
    return [
        "time",
        "timestamp",
        "interface",
        "State",
        "Attack",
        "Attack-Group",
        "Label",
        "Scenario",
        "",
        "_1",
        "_2",
        "_3",
    ]


def cicevse_schema(modality: Modality) -> CsvSchema:
    """CICEVSE2024 네트워크/커널(HPC) 테이블용 스키마 프리셋.

    두 테이블 모두 ``Scenario`` 열에 Benign/DoS/Recon 시나리오를 담는다.
    """
    del modality  # 현재 두 테이블이 같은 메타데이터 열을 쓴다.
    return CsvSchema(
        label_column="Scenario",
        label_value_map={k: int(v) for k, v in get_default_label_map().items()},
        skip_labels=get_skipped_labels(),
        drop_columns=get_non_feature_columns(),
    )
