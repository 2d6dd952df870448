"""실험 설정 모델.

모든 설정은 pydantic 모델이며 JSON으로 그대로 직렬화된다.
설정 파일은 TOML 또는 JSON(확장자로 판별)을 읽는다.
우선순위: 기본값 < 설정 파일 < 명령행 플래그.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any, Literal

from platformdirs import user_config_dir
from pydantic import BaseModel, Field, ValidationError, model_validator

from evse_fedfuse.errors import ConfigError
from evse_fedfuse.models.labels import N_CLASSES, CsvSchema

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

APP_NAME = "evse-fedfuse"

PartitionScheme = Literal["iid-stratified", "label-skew"]
Coupling = Literal["independent", "joint-only"]
Precision = Literal["float64", "float32"]


class AutoencoderConfig(BaseModel):
    """모달리티별 오토인코더 (d → hidden → latent → hidden → d).

    ``hidden``을 주지 않으면 max(64, 2·latent_dim)을 쓴다.
    """

    hidden: int = Field(ge=1)
    latent_dim: int = Field(default=32, ge=1)
    epochs: int = Field(default=20, ge=1)
    batch_size: int = Field(default=64, ge=1)
    lr: float = Field(default=1e-3, ge=0.0)

    @model_validator(mode="before")
    @classmethod
    def _default_hidden(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("hidden") is None:
            latent = data.get("latent_dim", 32)
            if isinstance(latent, int):
                data = {**data, "hidden": max(64, 2 * latent)}
        return data


class CnnConfig(BaseModel):
    """1D CNN 구조. 기본값: 64→60→30→28→14, flatten 448 → 3."""

    filters1: int = Field(default=16, ge=1)
    kernel1: int = Field(default=5, ge=1)
    filters2: int = Field(default=32, ge=1)
    kernel2: int = Field(default=3, ge=1)
    pool: int = Field(default=2, ge=1)
    input_length: int = Field(default=64, ge=1)
    n_classes: int = Field(default=N_CLASSES, ge=2)

    @model_validator(mode="after")
    def _check_lengths(self) -> CnnConfig:
        if self.flatten_size <= 0:
            raise ValueError(
                f"입력 길이 {self.input_length}에서 conv/pool 출력이 비게 됩니다."
            )
        return self

    @property
    def stage_lengths(self) -> tuple[int, int, int, int]:
        """(conv1, pool1, conv2, pool2) 출력 길이."""
        c1 = self.input_length - self.kernel1 + 1
        p1 = c1 // self.pool if c1 > 0 else 0
        c2 = p1 - self.kernel2 + 1
        p2 = c2 // self.pool if c2 > 0 else 0
        return c1, p1, c2, p2

    @property
    def flatten_size(self) -> int:
        return self.stage_lengths[3] * self.filters2

    @property
    def parameter_count(self) -> int:
        conv1 = self.filters1 * self.kernel1 + self.filters1
        conv2 = self.filters2 * self.filters1 * self.kernel2 + self.filters2
        dense = self.flatten_size * self.n_classes + self.n_classes
        return conv1 + conv2 + dense


class TrainConfig(BaseModel):
    """분류기 학습 하이퍼파라미터 (epochs 10, batch 32, Adam, cross-entropy).

    ``optimizer="sgd"``는 집계 식을 정확히 검증하기 위한 시험용 모드다.
    """

    epochs: int = Field(default=10, ge=1)
    batch_size: int = Field(default=32, ge=1)
    lr: float = Field(default=1e-3, ge=0.0)
    optimizer: Literal["adam", "sgd"] = "adam"
    seed: int = 0


class FedConfig(BaseModel):
    """연합 학습 시뮬레이션 설정."""

    n_clients: int = Field(default=10, ge=1)
    rounds: int = Field(default=10, ge=1)
    local_epochs: int = Field(default=1, ge=1)
    batch_size: int = Field(default=32, ge=1)
    lr: float = Field(default=1e-3, ge=0.0)
    participation: float = Field(default=1.0, gt=0.0, le=1.0)
    scheme: PartitionScheme = "iid-stratified"
    alpha: float = Field(default=0.5, gt=0.0)
    optimizer: Literal["adam", "sgd"] = "adam"
    seed: int = 0

    @property
    def total_epochs(self) -> int:
        """같은 예산의 중앙집중 학습 epoch 수 (E·R)."""
        return self.local_epochs * self.rounds


class SynthSpec(BaseModel):
    """합성 페어 데이터 생성 규격."""

    n_per_class: int = Field(default=500, ge=10)
    d1: int = Field(default=48, ge=3)
    d2: int = Field(default=40, ge=3)
    coupling: Coupling = "joint-only"
    noise_std: float = Field(default=0.1, ge=0.0)
    seed: int | None = None


class DataConfig(BaseModel):
    """데이터 소스. CSV 경로 두 개 또는 합성 규격 중 하나."""

    net_path: Path | None = None
    kernel_path: Path | None = None
    net_schema: CsvSchema | None = None
    kernel_schema: CsvSchema | None = None
    synth: SynthSpec | None = None
    cap_per_class: int | None = Field(default=None, ge=1)
    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)

    @property
    def uses_csv(self) -> bool:
        return self.net_path is not None or self.kernel_path is not None


class ExperimentConfig(BaseModel):
    """하나의 실행을 완전히 기술하는 선언적 설정."""

    data: DataConfig = Field(default_factory=DataConfig)
    autoencoder: AutoencoderConfig = Field(default_factory=AutoencoderConfig)
    cnn: CnnConfig = Field(default_factory=CnnConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    fed: FedConfig = Field(default_factory=FedConfig)
    client_counts: list[int] = Field(default_factory=lambda: [3, 6, 8, 10])
    seed: int = 42
    precision: Precision = "float64"
    out_dir: Path = Path("runs/latest")


def default_config_path() -> Path:
    """사용자 설정 파일 기본 위치."""
    return Path(user_config_dir(APP_NAME)) / "config.toml"


def load_config(path: Path | None = None) -> ExperimentConfig:
    """설정 파일을 읽는다. 경로가 없으면 사용자 설정 파일, 그것도 없으면 기본값."""
    if path is None:
        candidate = default_config_path()
        if not candidate.is_file():
            return ExperimentConfig()
        path = candidate

    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"설정 파일을 읽을 수 없습니다: {path} ({e})") from e

    try:
        if path.suffix == ".json":
            data = json.loads(raw.decode("utf-8"))
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as e:
        raise ConfigError(f"설정 파일 형식 오류: {path} ({e})") from e

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"설정 값 오류 ({path}):\n{e}") from e


def apply_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """점(.)으로 구분된 키로 중첩 필드를 덮어쓴다. None 값은 무시한다.

    예: ``{"fed.n_clients": 6, "seed": 7}``
    """
    data = config.model_dump()
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            if node.get(key) is None:
                node[key] = {}
            node = node[key]
        node[leaf] = value
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"플래그 값 오류:\n{e}") from e
