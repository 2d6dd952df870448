"""융합 잠재 벡터를 분류하는 1D CNN.

[batch × L] → reshape [batch × 1 × L] → conv1 → ReLU → pool → conv2 → ReLU → pool
→ flatten → dense → softmax. L은 융합 폭(64) 또는 단일 모달리티 폭(32)이다.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from evse_fedfuse.core.encoder import FusedDataset
from evse_fedfuse.errors import DimensionError, TrainingError
from evse_fedfuse.models.config import CnnConfig, TrainConfig
from evse_fedfuse.nn.functional import one_hot
from evse_fedfuse.nn.layers import (
    Conv1d,
    Dense,
    Flatten,
    MaxPool1d,
    ReLU,
    Reshape,
    Sequential,
    Softmax,
    backward,
)
from evse_fedfuse.nn.losses import CrossEntropyLoss
from evse_fedfuse.nn.optim import make_optimizer
from evse_fedfuse.nn.tensor import ModelParams

logger = logging.getLogger(__name__)


class CnnModel:
    """두 개의 conv+pool 블록과 dense softmax head."""

    def __init__(
        self, config: CnnConfig | None = None, seed: int = 0, dtype=np.float64
    ) -> None:
        self.config = config or CnnConfig()
        self.dtype = np.dtype(dtype)
        cfg = self.config
        rng = np.random.default_rng(seed)
        self.network = Sequential([
            Reshape(1, cfg.input_length),
            Conv1d(1, cfg.filters1, cfg.kernel1, rng, name="conv1", dtype=dtype),
            ReLU(),
            MaxPool1d(cfg.pool),
            Conv1d(
                cfg.filters1, cfg.filters2, cfg.kernel2, rng, name="conv2", dtype=dtype
            ),
            ReLU(),
            MaxPool1d(cfg.pool),
            Flatten(),
            Dense(cfg.flatten_size, cfg.n_classes, rng, name="dense", dtype=dtype),
            Softmax(),
        ])
        self.params = ModelParams(self.network.parameters())

    @property
    def parameter_count(self) -> int:
        return self.params.count

    def clone(self) -> CnnModel:
        """파라미터를 복사한 독립 인스턴스."""
        twin = copy.deepcopy(self)
        twin.params.zero_grad()
        return twin


def _check_width(model: CnnModel, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=model.dtype)
    if z.ndim != 2 or z.shape[1] != model.config.input_length:
        raise DimensionError(
            f"입력 shape {z.shape}: 폭이 {model.config.input_length}이어야 합니다."
        )
    return z


def cnn_forward(model: CnnModel, z: np.ndarray) -> np.ndarray:
    """클래스 확률 [batch × n_classes]."""
    return model.network.infer(_check_width(model, z))


def predict(model: CnnModel, z: np.ndarray) -> np.ndarray:
    """확률 argmax. 동률이면 가장 작은 클래스 번호."""
    return np.argmax(cnn_forward(model, z), axis=1).astype(np.int64)


def count_steps(n: int, batch: int, epochs: int) -> int:
    """미니배치 스텝 수. 배치는 n으로 잘린다."""
    if n <= 0:
        return 0
    return epochs * math.ceil(n / min(batch, n))


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    steps: int = 0

    @property
    def final_loss(self) -> float:
        return self.loss[-1] if self.loss else float("nan")

    @property
    def final_accuracy(self) -> float:
        return self.accuracy[-1] if self.accuracy else float("nan")


def train_epochs(
    model: CnnModel, data: FusedDataset, cfg: TrainConfig | None = None
) -> TrainHistory:
    """모델을 제자리에서 학습한다.

    epoch마다 ``cfg.seed``로 만든 생성기에서 순서를 섞는다. 정확도는 %.
    """
    cfg = cfg or TrainConfig()
    n = len(data)
    if n == 0:
        raise TrainingError("빈 데이터로 분류기를 학습할 수 없습니다.")
    x = _check_width(model, data.features)
    y = one_hot(data.labels, model.config.n_classes, dtype=model.dtype)

    optimizer = make_optimizer(cfg.optimizer, model.params, cfg.lr)
    criterion = CrossEntropyLoss()
    rng = np.random.default_rng(cfg.seed)
    batch = min(cfg.batch_size, n)
    history = TrainHistory()

    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, batch):
            idx = perm[start : start + batch]
            probs = model.network.forward(x[idx])
            total_loss += criterion.forward(probs, y[idx]) * idx.size
            correct += int(np.sum(np.argmax(probs, axis=1) == data.labels[idx]))
            backward(model.network, criterion)
            optimizer.step()
            history.steps += 1
        history.loss.append(total_loss / n)
        history.accuracy.append(100.0 * correct / n)

    logger.debug(
        "CNN 학습: %d epoch, loss %.4f, train acc %.2f%%",
        cfg.epochs,
        history.final_loss,
        history.final_accuracy,
    )
    return history
