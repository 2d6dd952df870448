"""연합 학습 시뮬레이션과 중앙집중 기준선.

충전소(``StationClient``)는 자기 융합 데이터를 갖고 로컬에서 CNN을 학습한다.
서버(``ParameterServer``)는 ``ClientUpdate``(파라미터 벡터와 표본 수)만 받아
n_i/Σn 가중 평균으로 전역 파라미터를 갱신한다.
"""

from __future__ import annotations

import logging
import math
import os
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from evse_fedfuse.core.classifier import CnnModel, TrainHistory, predict, train_epochs
from evse_fedfuse.core.encoder import FusedDataset
from evse_fedfuse.core.metrics import (
    ConfusionMatrix,
    MetricsReport,
    compute_metrics,
    confusion,
)
from evse_fedfuse.errors import AggregationError, ClientError, FedFuseError
from evse_fedfuse.models.config import CnnConfig, FedConfig, TrainConfig
from evse_fedfuse.utils.seeding import derive_seed, make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClientUpdate:
    """클라이언트가 서버로 보내는 전부."""

    client_id: int
    params: np.ndarray
    sample_count: int
    loss: float


@dataclass
class RoundReport:
    round: int
    clients: list[int]
    weights: list[float]
    loss: float
    metrics: MetricsReport | None = None
    duration_ms: float = 0.0

    def to_record(self) -> dict:
        """rounds.jsonl 한 줄."""
        m = self.metrics
        return {
            "round": self.round,
            "clients": self.clients,
            "weights": self.weights,
            "loss": self.loss,
            "accuracy": m.accuracy if m else None,
            "precision": m.precision if m else None,
            "recall": m.recall if m else None,
            "f1": m.f1 if m else None,
            "fpr": m.fpr_binary if m else None,
            "duration_ms": round(self.duration_ms, 3),
        }


@dataclass
class StationClient:
    """한 충전소. 원시/융합 데이터는 이 객체 밖으로 나가지 않는다."""

    client_id: int
    train: FusedDataset
    test: FusedDataset | None = None

    @property
    def sample_count(self) -> int:
        return len(self.train)

    def local_update(
        self, global_model: CnnModel, cfg: FedConfig, round_index: int
    ) -> ClientUpdate | None:
        seed = derive_seed(cfg.seed, self.client_id, round_index)
        return local_update(
            global_model,
            self.train,
            epochs=cfg.local_epochs,
            batch_size=cfg.batch_size,
            lr=cfg.lr,
            seed=seed,
            optimizer=cfg.optimizer,
            client_id=self.client_id,
        )

    def test_confusion(self, model: CnnModel) -> ConfusionMatrix:
        if self.test is None or len(self.test) == 0:
            return ConfusionMatrix.empty(model.config.n_classes)
        pred = predict(model, self.test.features)
        return confusion(self.test.labels, pred, model.config.n_classes)


def local_update(
    global_model: CnnModel,
    shard: FusedDataset,
    epochs: int = 1,
    batch_size: int = 32,
    lr: float = 1e-3,
    seed: int = 0,
    optimizer: str = "adam",
    client_id: int = 0,
) -> ClientUpdate | None:
    """전역 모델을 복제해 로컬 shard로 E epoch 학습한다. 전역 모델은 건드리지 않는다."""
    if len(shard) == 0:
        logger.warning("client %d: 학습 데이터가 없어 이번 라운드에서 제외합니다.", client_id)
        return None
    model = global_model.clone()
    cfg = TrainConfig(
        epochs=epochs, batch_size=batch_size, lr=lr, optimizer=optimizer, seed=seed
    )
    try:
        history = train_epochs(model, shard, cfg)
    except FedFuseError as e:
        raise ClientError(client_id, str(e)) from e
    return ClientUpdate(
        client_id=client_id,
        params=model.params.to_vector(),
        sample_count=len(shard),
        loss=history.final_loss,
    )


def aggregation_weights(updates: Sequence[ClientUpdate]) -> np.ndarray:
    counts = np.array([u.sample_count for u in updates], dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise AggregationError("집계할 표본 수 합이 0입니다.")
    return counts / total


def aggregate_weighted(updates: Sequence[ClientUpdate]) -> np.ndarray:
    """FedAvg: θ = Σ_i (n_i/Σn)·θ_i. 합산 순서는 client_id로 고정한다."""
    if not updates:
        raise AggregationError("집계할 업데이트가 없습니다.")
    for u in updates:
        if not isinstance(u, ClientUpdate):
            raise AggregationError(f"ClientUpdate가 아닌 입력: {type(u).__name__}")
    ordered = sorted(updates, key=lambda u: u.client_id)
    sizes = {u.params.size for u in ordered}
    if len(sizes) != 1:
        raise AggregationError(f"파라미터 벡터 길이가 다릅니다: {sorted(sizes)}")
    weights = aggregation_weights(ordered)
    stacked = np.stack([u.params for u in ordered])
    return weights @ stacked


class ParameterServer:
    """전역 CNN을 보관하고 업데이트를 집계한다."""

    def __init__(self, model: CnnModel) -> None:
        self._model = model

    @property
    def model(self) -> CnnModel:
        return self._model

    @property
    def parameter_count(self) -> int:
        return self._model.params.count

    def apply(self, updates: Sequence[ClientUpdate]) -> list[float]:
        """집계 결과를 전역 모델에 적용하고 client_id 순서의 가중치를 돌려준다."""
        for u in updates:
            if isinstance(u, ClientUpdate) and u.params.size != self.parameter_count:
                raise AggregationError(
                    f"client {u.client_id}: 파라미터 {u.params.size}개 "
                    f"!= 전역 {self.parameter_count}개"
                )
        vector = aggregate_weighted(updates)
        self._model.params.load_vector(vector)
        ordered = sorted(updates, key=lambda u: u.client_id)
        return aggregation_weights(ordered).tolist()


def select_participants(
    n_clients: int, fraction: float, seed: int, round_index: int
) -> list[int]:
    """라운드마다 ⌈fraction·N⌉개 클라이언트를 시드 기반으로 뽑는다."""
    k = max(1, math.ceil(fraction * n_clients - 1e-12))
    if k >= n_clients:
        return list(range(n_clients))
    rng = make_rng(seed, "participation", round_index)
    return sorted(rng.choice(n_clients, size=k, replace=False).tolist())


@dataclass
class FederatedResult:
    model: CnnModel
    rounds: list[RoundReport] = field(default_factory=list)


def _pooled_metrics(
    clients: Sequence[StationClient], model: CnnModel
) -> MetricsReport | None:
    cm = ConfusionMatrix.empty(model.config.n_classes)
    for client in clients:
        cm = cm + client.test_confusion(model)
    return compute_metrics(cm) if cm.total else None


def run_federated(
    cfg: FedConfig,
    clients: Sequence[StationClient],
    cnn_config: CnnConfig | None = None,
    dtype=np.float64,
    jobs: int | None = None,
    init_seed: int | None = None,
) -> FederatedResult:
    """R 라운드 동안 broadcast → 병렬 local_update → 가중 평균 → 평가를 반복한다."""
    if not clients:
        raise AggregationError("클라이언트가 없습니다.")
    if init_seed is None:
        init_seed = derive_seed(cfg.seed, "cnn-init")
    server = ParameterServer(CnnModel(cnn_config, seed=init_seed, dtype=dtype))
    by_id = sorted(clients, key=lambda c: c.client_id)
    workers = jobs or os.cpu_count() or 1
    result = FederatedResult(model=server.model)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for t in range(1, cfg.rounds + 1):
            started = time.perf_counter()
            chosen = [by_id[i] for i in select_participants(
                len(by_id), cfg.participation, cfg.seed, t
            )]
            futures = [
                pool.submit(c.local_update, server.model, cfg, t) for c in chosen
            ]
            updates = [u for u in (f.result() for f in futures) if u is not None]
            if not updates:
                raise AggregationError(f"round {t}: 유효한 클라이언트 업데이트가 없습니다.")

            weights = server.apply(updates)
            ordered = sorted(updates, key=lambda u: u.client_id)
            loss = float(sum(w * u.loss for w, u in zip(weights, ordered)))
            report = RoundReport(
                round=t,
                clients=[u.client_id for u in ordered],
                weights=weights,
                loss=loss,
                metrics=_pooled_metrics(by_id, server.model),
                duration_ms=(time.perf_counter() - started) * 1000.0,
            )
            result.rounds.append(report)
            logger.info(
                "round %d/%d: clients %d, loss %.4f%s",
                t,
                cfg.rounds,
                len(updates),
                loss,
                f", acc {report.metrics.accuracy:.2f}%" if report.metrics else "",
            )
    return result


def budget_matched(cfg: FedConfig) -> TrainConfig:
    """연합 설정과 같은 총 epoch(E·R) 예산의 중앙집중 학습 설정."""
    return TrainConfig(
        epochs=cfg.total_epochs,
        batch_size=cfg.batch_size,
        lr=cfg.lr,
        optimizer=cfg.optimizer,
        seed=derive_seed(cfg.seed, "centralized"),
    )


@dataclass
class CentralizedResult:
    model: CnnModel
    history: TrainHistory
    metrics: MetricsReport | None = None


def run_centralized(
    cfg: TrainConfig,
    train: FusedDataset,
    test: FusedDataset | None = None,
    cnn_config: CnnConfig | None = None,
    dtype=np.float64,
    init_seed: int | None = None,
) -> CentralizedResult:
    """풀링된 학습 데이터 하나로 같은 CNN을 학습한다."""
    if init_seed is None:
        init_seed = derive_seed(cfg.seed, "cnn-init")
    model = CnnModel(cnn_config, seed=init_seed, dtype=dtype)
    history = train_epochs(model, train, cfg)
    metrics = None
    if test is not None and len(test):
        pred = predict(model, test.features)
        cm = confusion(test.labels, pred, model.config.n_classes)
        metrics = compute_metrics(cm)
    return CentralizedResult(model=model, history=history, metrics=metrics)
