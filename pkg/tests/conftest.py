"""공통 테스트 fixture."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from evse_fedfuse.core.synth import synth_generate, to_frames
from evse_fedfuse.models.config import (
    AutoencoderConfig,
    DataConfig,
    ExperimentConfig,
    FedConfig,
    SynthSpec,
    TrainConfig,
)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_paired():
    """클래스당 40쌍의 작은 합성 데이터."""
    return synth_generate(40, 8, 6, coupling="independent", noise_std=0.1, seed=3)


@pytest.fixture
def synth_csvs(tmp_path: Path) -> tuple[Path, Path]:
    """합성 데이터를 CSV 두 개로 저장한다."""
    ds = synth_generate(30, 6, 5, coupling="independent", noise_std=0.1, seed=5)
    net_df, kernel_df = to_frames(ds)
    net_path = tmp_path / "network.csv"
    kernel_path = tmp_path / "kernel.csv"
    net_df.to_csv(net_path, index=False)
    kernel_df.to_csv(kernel_path, index=False)
    return net_path, kernel_path


@pytest.fixture
def csv_file(tmp_path: Path):
    """DataFrame을 tmp_path 아래 CSV로 쓰는 helper."""

    def _write(name: str, frame: pd.DataFrame) -> Path:
        path = tmp_path / name
        frame.to_csv(path, index=False)
        return path

    return _write


@pytest.fixture
def tiny_config(tmp_path: Path) -> ExperimentConfig:
    """몇 초 안에 끝나는 실험 설정."""
    return ExperimentConfig(
        data=DataConfig(
            synth=SynthSpec(n_per_class=40, d1=8, d2=6, coupling="independent")
        ),
        autoencoder=AutoencoderConfig(hidden=16, epochs=2, batch_size=32),
        train=TrainConfig(epochs=2, batch_size=32),
        fed=FedConfig(n_clients=3, rounds=2, local_epochs=1, batch_size=32),
        client_counts=[2, 3],
        seed=7,
        out_dir=tmp_path / "run",
    )


@pytest.fixture(autouse=True)
def _reset_package_logger():
    """CLI가 붙인 RichHandler를 떼어 caplog가 레코드를 받게 한다."""
    yield
    logger = logging.getLogger("evse_fedfuse")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.propagate = True
    logger.setLevel(logging.NOTSET)
