"""모달리티별 오토인코더와 잠재 벡터 융합.

각 모달리티 특성 x를 오토인코더 인코더로 32차원 잠재 벡터 z로 압축하고,
네트워크 → 커널 순서로 이어 붙여 64차원 융합 벡터를 만든다.
오토인코더 학습은 라벨을 받지 않는다.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from evse_fedfuse.core.dataset import PairedDataset
from evse_fedfuse.errors import DimensionError, TrainingError
from evse_fedfuse.models.config import AutoencoderConfig
from evse_fedfuse.models.labels import Modality
from evse_fedfuse.nn.layers import Dense, ReLU, Sequential, backward
from evse_fedfuse.nn.losses import MSELoss
from evse_fedfuse.nn.optim import Adam
from evse_fedfuse.nn.tensor import ModelParams
from evse_fedfuse.utils.seeding import make_rng

logger = logging.getLogger(__name__)

LATENT_DIM = 32


class AutoencoderModel:
    """d → h → latent (ReLU) 인코더와 latent → h → d (선형 출력) 디코더."""

    def __init__(
        self,
        d: int,
        config: AutoencoderConfig | None = None,
        modality: Modality | None = None,
        seed: int = 0,
        dtype=np.float64,
    ) -> None:
        if d < 1:
            raise DimensionError(f"입력 차원은 1 이상이어야 합니다: {d}")
        self.config = config or AutoencoderConfig()
        self.modality = modality
        self.dtype = np.dtype(dtype)
        h, latent = self.config.hidden, self.config.latent_dim
        rng = np.random.default_rng(seed)
        self.encoder = Sequential([
            Dense(d, h, rng, "encoder.0", dtype),
            ReLU(),
            Dense(h, latent, rng, "encoder.1", dtype),
            ReLU(),
        ])
        self.decoder = Sequential([
            Dense(latent, h, rng, "decoder.0", dtype),
            ReLU(),
            Dense(h, d, rng, "decoder.1", dtype),
        ])
        self.network = Sequential([self.encoder, self.decoder])
        self.params = ModelParams(self.network.parameters())
        self._d = d

    @property
    def d(self) -> int:
        return self._d

    @property
    def hidden(self) -> int:
        return self.config.hidden

    @property
    def latent_dim(self) -> int:
        return self.config.latent_dim

    def reconstruct(self, x: np.ndarray) -> np.ndarray:
        return self.network.infer(np.asarray(x, dtype=self.dtype))


@dataclass(frozen=True)
class FusedDataset:
    """융합 잠재 벡터와 라벨."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        if self.features.shape[0] != self.labels.shape[0]:
            raise DimensionError(
                f"융합 행 수 {self.features.shape[0]} != 라벨 수 {self.labels.shape[0]}"
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def width(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: np.ndarray) -> FusedDataset:
        idx = np.asarray(indices, dtype=np.int64)
        return FusedDataset(self.features[idx], self.labels[idx])


def _warn_if_not_decreasing(history: list[float], modality: Modality | None) -> None:
    if len(history) < 4:
        return
    smoothed = np.convolve(history, np.ones(3) / 3, mode="valid")
    rises = np.flatnonzero(np.diff(smoothed) > 1e-12)
    if rises.size:
        logger.warning(
            "AE(%s) 손실이 3-epoch 평활 기준으로 증가했습니다 (epoch %s)",
            modality.value if modality else "-",
            (rises + 3).tolist(),
        )


def train_autoencoder(
    features: np.ndarray,
    config: AutoencoderConfig | None = None,
    seed: int = 0,
    modality: Modality | None = None,
    init_seed: int | None = None,
    dtype=np.float64,
) -> tuple[AutoencoderModel, list[float]]:
    """MSE + Adam으로 오토인코더를 학습하고 (모델, epoch별 손실)을 반환한다.

    ``init_seed``가 주어지면 가중치 초기화에 쓰고, 미니배치 순서는 ``seed``로 정한다.
    """
    config = config or AutoencoderConfig()
    x = np.asarray(features, dtype=dtype)
    if x.ndim != 2 or x.shape[1] < 1:
        raise DimensionError(f"features는 [n × d] (d ≥ 1)이어야 합니다: {x.shape}")
    n, d = x.shape
    if n == 0:
        raise TrainingError("빈 데이터로 오토인코더를 학습할 수 없습니다.")
    if d < config.latent_dim:
        logger.warning(
            "AE(%s): 입력 차원 %d < 잠재 차원 %d (압축이 아닌 확장)",
            modality.value if modality else "-",
            d,
            config.latent_dim,
        )

    model = AutoencoderModel(
        d, config, modality, seed=seed if init_seed is None else init_seed, dtype=dtype
    )
    optimizer = Adam(model.params, lr=config.lr)
    criterion = MSELoss()
    rng = make_rng(seed, "ae-shuffle")
    batch = min(config.batch_size, n)

    history: list[float] = []
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch):
            xb = x[perm[start : start + batch]]
            out = model.network.forward(xb)
            total += criterion.forward(out, xb) * xb.shape[0]
            backward(model.network, criterion)
            optimizer.step()
        history.append(total / n)

    _warn_if_not_decreasing(history, modality)
    logger.debug(
        "AE(%s) 학습 완료: 최종 MSE %.6f",
        modality.value if modality else "-",
        history[-1],
    )
    return model, history


def encode(model: AutoencoderModel, x: np.ndarray) -> np.ndarray:
    """인코더 절반만 통과시켜 [n × latent_dim] 잠재 벡터를 얻는다."""
    x = np.asarray(x, dtype=model.dtype)
    if x.ndim != 2 or x.shape[1] != model.d:
        raise DimensionError(f"입력 shape {x.shape}이 모델 입력 차원 {model.d}와 다릅니다.")
    return model.encoder.infer(x)


def fuse(*latents: np.ndarray) -> np.ndarray:
    """잠재 블록을 주어진 순서대로 행 단위로 이어 붙인다 (네트워크 먼저)."""
    if not latents:
        raise DimensionError("융합할 잠재 벡터가 없습니다.")
    rows = {z.shape[0] for z in latents}
    if len(rows) != 1 or any(z.ndim != 2 for z in latents):
        raise DimensionError(
            f"융합 입력의 행 수가 다릅니다: {[z.shape for z in latents]}"
        )
    return np.concatenate(latents, axis=1)


def unfuse(
    z: np.ndarray, sizes: tuple[int, ...] = (LATENT_DIM, LATENT_DIM)
) -> tuple[np.ndarray, ...]:
    """``fuse``의 역연산."""
    if z.ndim != 2 or sum(sizes) != z.shape[1]:
        raise DimensionError(f"폭 {z.shape}을 블록 {sizes}로 나눌 수 없습니다.")
    cuts = np.cumsum(sizes)[:-1]
    return tuple(np.split(z, cuts, axis=1))


def encode_pair(
    net_ae: AutoencoderModel, kernel_ae: AutoencoderModel, ds: PairedDataset
) -> FusedDataset:
    """페어 데이터셋을 두 인코더로 압축해 융합한다."""
    z = fuse(encode(net_ae, ds.net_features), encode(kernel_ae, ds.kernel_features))
    return FusedDataset(z, ds.labels)
