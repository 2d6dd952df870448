"""모달리티 데이터 적재, 정규화, 페어링, 분할, 클라이언트 분배."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from evse_fedfuse.errors import (
    DimensionError,
    IngestError,
    LabelError,
    PairingError,
    PartitionError,
    SplitError,
)
from evse_fedfuse.models.labels import (
    CLASS_NAMES,
    N_CLASSES,
    CsvSchema,
    Modality,
    get_default_label_map,
)

logger = logging.getLogger(__name__)

CONSTANT_STD = 1e-12
_MAX_SKEW_ATTEMPTS = 100


@dataclass(frozen=True)
class NormStats:
    """학습 분할에서 구한 특성별 평균/표준편차."""

    mean: np.ndarray
    std: np.ndarray

    @property
    def constant_count(self) -> int:
        """분산이 0이라 정규화 후 0이 되는 특성 수."""
        return int(np.sum(self.std < CONSTANT_STD))

    def to_dict(self) -> dict[str, list[float]]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> NormStats:
        return cls(
            mean=np.asarray(data["mean"], dtype=np.float64),
            std=np.asarray(data["std"], dtype=np.float64),
        )


def _check_labels(labels: np.ndarray) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= N_CLASSES):
        bad = sorted(set(labels[(labels < 0) | (labels >= N_CLASSES)].tolist()))
        raise LabelError(f"라벨은 0..{N_CLASSES - 1} 범위여야 합니다: {bad}")


def class_counts(labels: np.ndarray) -> dict[str, int]:
    counts = np.bincount(labels, minlength=N_CLASSES)
    return {name: int(counts[i]) for i, name in enumerate(CLASS_NAMES)}


@dataclass(frozen=True)
class ModalityDataset:
    """한 모달리티의 특성 행렬과 행별 클래스 라벨."""

    modality: Modality
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = ()
    norm_stats: NormStats | None = None

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise DimensionError(f"features는 2차원이어야 합니다: {self.features.shape}")
        if self.features.shape[0] != self.labels.shape[0]:
            raise DimensionError(
                f"행 수 {self.features.shape[0]} != 라벨 수 {self.labels.shape[0]}"
            )
        if self.feature_names and len(self.feature_names) != self.features.shape[1]:
            raise DimensionError(
                f"특성 이름 {len(self.feature_names)}개 != 열 {self.features.shape[1]}개"
            )
        _check_labels(self.labels)

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    def class_counts(self) -> dict[str, int]:
        return class_counts(self.labels)


@dataclass(frozen=True)
class PairedDataset:
    """같은 라벨을 가진 네트워크/커널 행의 쌍."""

    net_features: np.ndarray
    kernel_features: np.ndarray
    labels: np.ndarray
    pairing_seed: int = 0
    net_feature_names: tuple[str, ...] = ()
    kernel_feature_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = self.labels.shape[0]
        if self.net_features.shape[0] != n or self.kernel_features.shape[0] != n:
            raise DimensionError(
                f"페어 행 수 불일치: net {self.net_features.shape[0]}, "
                f"kernel {self.kernel_features.shape[0]}, labels {n}"
            )
        _check_labels(self.labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, indices: np.ndarray) -> PairedDataset:
        idx = np.asarray(indices, dtype=np.int64)
        return replace(
            self,
            net_features=self.net_features[idx],
            kernel_features=self.kernel_features[idx],
            labels=self.labels[idx],
        )

    def features(self, modality: Modality) -> np.ndarray:
        if modality is Modality.NETWORK:
            return self.net_features
        return self.kernel_features

    def modality(self, modality: Modality) -> ModalityDataset:
        names = (
            self.net_feature_names
            if modality is Modality.NETWORK
            else self.kernel_feature_names
        )
        return ModalityDataset(modality, self.features(modality), self.labels, names)

    def class_counts(self) -> dict[str, int]:
        return class_counts(self.labels)


@dataclass(frozen=True)
class ClientShard:
    """한 충전소(클라이언트)에 배정된 학습 행 인덱스."""

    client_id: int
    indices: np.ndarray

    @property
    def sample_count(self) -> int:
        return int(self.indices.size)


@dataclass
class IngestReport:
    """CSV 적재 결과."""

    path: str
    rows_read: int = 0
    rows_dropped: int = 0
    rows_skipped: int = 0
    class_counts: dict[str, int] = field(default_factory=dict)
    n_features: int = 0
    rejected_columns: list[str] = field(default_factory=list)


# --- load ------------------------------------------------------------------


def _select_feature_columns(
    df: pd.DataFrame, schema: CsvSchema
) -> tuple[list[str], list[str]]:
    if schema.feature_columns is not None:
        missing = [c for c in schema.feature_columns if c not in df.columns]
        if missing:
            raise IngestError(f"지정한 특성 열이 없습니다: {missing}")
        non_numeric = [
            c for c in schema.feature_columns
            if not pd.api.types.is_numeric_dtype(df[c])
        ]
        if non_numeric:
            raise IngestError(f"숫자가 아닌 특성 열: {non_numeric}")
        return list(schema.feature_columns), []

    excluded = set(schema.drop_columns) | {schema.label_column}
    kept: list[str] = []
    rejected: list[str] = []
    for col in df.columns:
        if col in excluded or str(col).startswith("Unnamed:"):
            continue
        if pd.api.types.is_numeric_dtype(df[col]):
            kept.append(col)
        else:
            rejected.append(col)
    if not kept:
        raise IngestError("숫자 특성 열이 하나도 없습니다.")
    return kept, rejected


def load_csv(
    path: Path, schema: CsvSchema, modality: Modality
) -> tuple[ModalityDataset, IngestReport]:
    """CSV 특성 테이블을 읽어 ModalityDataset으로 만든다.

    결측/무한대 값이 있는 행은 버리고 개수를 센다.
    ``skip_labels``에 해당하는 행은 따로 센다.
    ``label_value_map``이 비어 있으면 기본 매핑(Benign/DoS/Recon)을 쓴다.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"파일이 없습니다: {path}")
    try:
        df = pd.read_csv(path, encoding="utf-8", low_memory=False)
    except pd.errors.EmptyDataError as e:
        raise IngestError(f"빈 파일입니다: {path}") from e
    except (UnicodeDecodeError, pd.errors.ParserError) as e:
        raise IngestError(f"CSV를 해석할 수 없습니다: {path} ({e})") from e

    if df.empty:
        raise IngestError(f"데이터 행이 없습니다: {path}")
    if schema.label_column not in df.columns:
        raise IngestError(f"{path}: 라벨 열 '{schema.label_column}'이 없습니다.")

    report = IngestReport(path=str(path), rows_read=len(df))
    features, report.rejected_columns = _select_feature_columns(df, schema)
    if report.rejected_columns:
        logger.warning("%s: 숫자가 아닌 열 제외 %s", path.name, report.rejected_columns)

    raw_labels = df[schema.label_column]
    label_text = raw_labels.astype(str).str.strip()
    skip = label_text.isin(schema.skip_labels).to_numpy()
    report.rows_skipped = int(skip.sum())

    values = df[features].to_numpy(dtype=np.float64)
    missing = ~np.isfinite(values).all(axis=1) | raw_labels.isna().to_numpy()
    drop = missing & ~skip
    report.rows_dropped = int(drop.sum())
    if report.rows_dropped:
        logger.warning("%s: 결측 값이 있는 %d행을 버렸습니다.", path.name, report.rows_dropped)

    keep = ~(skip | drop)
    label_map = schema.label_value_map or {
        k: int(v) for k, v in get_default_label_map().items()
    }
    kept_text = label_text[keep]
    unknown = ~kept_text.isin(list(label_map))
    if unknown.any():
        first = unknown.to_numpy().nonzero()[0][0]
        row_index = kept_text.index[first]
        # 헤더가 1행이므로 데이터 행 번호는 index + 2
        raise IngestError(
            f"{path}: 알 수 없는 라벨 값 '{kept_text.iloc[first]}' "
            f"(행 {int(row_index) + 2})"
        )

    labels = kept_text.map(label_map).to_numpy(dtype=np.int64)
    if labels.size == 0:
        raise IngestError(f"{path}: 남은 행이 없습니다.")

    dataset = ModalityDataset(
        modality=modality,
        features=np.ascontiguousarray(values[keep]),
        labels=labels,
        feature_names=tuple(str(c) for c in features),
    )
    report.class_counts = dataset.class_counts()
    report.n_features = dataset.d
    logger.info(
        "%s 적재: %d행 읽음, %d행 결측 제거, %d행 제외 라벨, 클래스 %s",
        path.name,
        report.rows_read,
        report.rows_dropped,
        report.rows_skipped,
        report.class_counts,
    )
    return dataset, report


# --- normalize -------------------------------------------------------------


def compute_norm_stats(features: np.ndarray) -> NormStats:
    return NormStats(mean=features.mean(axis=0), std=features.std(axis=0))


def apply_norm(features: np.ndarray, stats: NormStats) -> np.ndarray:
    if stats.mean.shape != (features.shape[1],) or stats.std.shape != stats.mean.shape:
        raise DimensionError(
            f"정규화 통계 차원 {stats.mean.shape}이 특성 수 {features.shape[1]}와 다릅니다."
        )
    constant = stats.std < CONSTANT_STD
    scale = np.where(constant, 1.0, stats.std)
    out = (features - stats.mean) / scale
    out[:, constant] = 0.0
    return out


def normalize(ds: ModalityDataset, stats: NormStats | None = None) -> ModalityDataset:
    """z-score 정규화. ``stats``가 없으면 ds(학습 분할)에서 구한다.

    분산이 0인 특성은 0으로 만든다.
    """
    if stats is None:
        stats = compute_norm_stats(ds.features)
    return replace(ds, features=apply_norm(ds.features, stats), norm_stats=stats)


def normalize_pair(
    train: PairedDataset, test: PairedDataset
) -> tuple[PairedDataset, PairedDataset, dict[Modality, NormStats]]:
    """학습 분할 통계로 두 모달리티를 정규화한다. 테스트 통계는 쓰지 않는다."""
    stats = {
        Modality.NETWORK: compute_norm_stats(train.net_features),
        Modality.KERNEL: compute_norm_stats(train.kernel_features),
    }
    norm_train = normalize_paired_with(train, stats)
    return norm_train, normalize_paired_with(test, stats), stats


def normalize_paired_with(
    ds: PairedDataset, stats: dict[Modality, NormStats]
) -> PairedDataset:
    return replace(
        ds,
        net_features=apply_norm(ds.net_features, stats[Modality.NETWORK]),
        kernel_features=apply_norm(ds.kernel_features, stats[Modality.KERNEL]),
    )


# --- pair / split / partition ----------------------------------------------


def pair_modalities(
    net: ModalityDataset,
    kernel: ModalityDataset,
    per_class_cap: int | None = None,
    seed: int = 0,
) -> PairedDataset:
    """클래스 안에서 무작위로 섞은 뒤 위치별로 짝을 짓는다.

    클래스별 쌍 수 n_c = min(net 수, kernel 수, cap). 중복 사용은 없다.
    """
    net_classes = set(np.unique(net.labels).tolist())
    kernel_classes = set(np.unique(kernel.labels).tolist())
    if net_classes != kernel_classes:
        only_net = sorted(net_classes - kernel_classes)
        only_kernel = sorted(kernel_classes - net_classes)
        raise PairingError(
            f"클래스 집합 불일치: network에만 {[CLASS_NAMES[c] for c in only_net]}, "
            f"kernel에만 {[CLASS_NAMES[c] for c in only_kernel]}"
        )

    rng = np.random.default_rng(seed)
    net_rows: list[np.ndarray] = []
    kernel_rows: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    for c in sorted(net_classes):
        net_idx = rng.permutation(np.flatnonzero(net.labels == c))
        kernel_idx = rng.permutation(np.flatnonzero(kernel.labels == c))
        n_c = min(net_idx.size, kernel_idx.size)
        if per_class_cap is not None:
            n_c = min(n_c, per_class_cap)
        net_rows.append(net_idx[:n_c])
        kernel_rows.append(kernel_idx[:n_c])
        labels.append(np.full(n_c, c, dtype=np.int64))
        logger.debug("class %s: %d쌍", CLASS_NAMES[c], n_c)

    net_sel = np.concatenate(net_rows) if net_rows else np.zeros(0, dtype=np.int64)
    kernel_sel = (
        np.concatenate(kernel_rows) if kernel_rows else np.zeros(0, dtype=np.int64)
    )
    return PairedDataset(
        net_features=net.features[net_sel],
        kernel_features=kernel.features[kernel_sel],
        labels=np.concatenate(labels) if labels else np.zeros(0, dtype=np.int64),
        pairing_seed=seed,
        net_feature_names=net.feature_names,
        kernel_feature_names=kernel.feature_names,
    )


def split(
    ds: PairedDataset, test_fraction: float = 0.2, seed: int = 0
) -> tuple[PairedDataset, PairedDataset]:
    """클래스별 층화 분할. 클래스별 테스트 수는 round(test_fraction·n_c)."""
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction은 (0, 1) 범위여야 합니다: {test_fraction}")
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for c in np.unique(ds.labels):
        idx = rng.permutation(np.flatnonzero(ds.labels == c))
        if idx.size < 2:
            raise SplitError(f"클래스 {CLASS_NAMES[c]}의 표본이 {idx.size}개뿐입니다.")
        n_test = int(np.floor(test_fraction * idx.size + 0.5))
        n_test = min(max(n_test, 1), idx.size - 1)
        test_idx.append(idx[:n_test])
        train_idx.append(idx[n_test:])
    if not train_idx:
        raise SplitError("빈 데이터셋은 분할할 수 없습니다.")
    return (
        ds.subset(np.sort(np.concatenate(train_idx))),
        ds.subset(np.sort(np.concatenate(test_idx))),
    )


def _iid_stratified(
    labels: np.ndarray, n_clients: int, rng: np.random.Generator
) -> list[list[np.ndarray]]:
    buckets: list[list[np.ndarray]] = [[] for _ in range(n_clients)]
    offset = 0
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        owners = (offset + np.arange(idx.size)) % n_clients
        for client in range(n_clients):
            buckets[client].append(idx[owners == client])
        offset = (offset + idx.size) % n_clients
    return buckets


def _label_skew(
    labels: np.ndarray, n_clients: int, alpha: float, rng: np.random.Generator
) -> list[list[np.ndarray]]:
    for _ in range(_MAX_SKEW_ATTEMPTS):
        buckets: list[list[np.ndarray]] = [[] for _ in range(n_clients)]
        for c in np.unique(labels):
            idx = rng.permutation(np.flatnonzero(labels == c))
            proportions = rng.dirichlet(np.full(n_clients, alpha))
            cuts = (np.cumsum(proportions) * idx.size).astype(np.int64)[:-1]
            for client, part in enumerate(np.split(idx, cuts)):
                buckets[client].append(part)
        if all(sum(p.size for p in parts) > 0 for parts in buckets):
            return buckets
    raise PartitionError(
        f"label-skew(α={alpha})로 {n_clients}개 클라이언트 모두에 "
        f"표본을 배정하지 못했습니다."
    )


def partition_clients(
    train: PairedDataset,
    n_clients: int,
    scheme: str = "iid-stratified",
    seed: int = 0,
    alpha: float = 0.5,
) -> list[ClientShard]:
    """학습 데이터를 클라이언트별로 겹치지 않게 나눈다.

    iid-stratified: 클래스마다 섞어서 돌아가며 배정 (클래스별 ±1 균형).
    label-skew: 클래스마다 Dirichlet(α) 비율로 배정.
    """
    n = len(train)
    if n_clients < 1:
        raise PartitionError(f"n_clients는 1 이상이어야 합니다: {n_clients}")
    if n_clients > n:
        raise PartitionError(f"클라이언트 {n_clients}개 > 표본 {n}개")

    rng = np.random.default_rng(seed)
    if scheme == "iid-stratified":
        buckets = _iid_stratified(train.labels, n_clients, rng)
    elif scheme == "label-skew":
        buckets = _label_skew(train.labels, n_clients, alpha, rng)
    else:
        raise PartitionError(f"알 수 없는 분배 방식: {scheme!r}")

    shards = [
        ClientShard(client_id=i, indices=np.sort(np.concatenate(parts)))
        for i, parts in enumerate(buckets)
    ]
    logger.debug("분배 %s: %s", scheme, [s.sample_count for s in shards])
    return shards


def partition_like(
    ds: PairedDataset,
    reference: PairedDataset,
    shards: Sequence[ClientShard],
    seed: int = 0,
) -> list[ClientShard]:
    """``shards``가 ``reference``를 나눈 클래스 비율 그대로 ``ds``를 나눈다.

    클래스마다 각 클라이언트가 가진 reference 표본 수에 비례해 배정하고
    남는 표본은 최대 잔여 순서로 준다. 학습에 없던 클래스는 shard 크기에 비례한다.
    """
    if not shards:
        raise PartitionError("기준 shard가 없습니다.")
    rng = np.random.default_rng(seed)
    buckets: list[list[np.ndarray]] = [[] for _ in shards]
    sizes = np.array([s.sample_count for s in shards], dtype=np.float64)
    for c in np.unique(ds.labels):
        idx = rng.permutation(np.flatnonzero(ds.labels == c))
        weights = np.array(
            [np.sum(reference.labels[s.indices] == c) for s in shards],
            dtype=np.float64,
        )
        if weights.sum() == 0:
            weights = sizes
        quota = weights / weights.sum() * idx.size
        counts = np.floor(quota).astype(np.int64)
        order = np.argsort(counts - quota, kind="stable")
        counts[order[: idx.size - counts.sum()]] += 1
        for client, part in enumerate(np.split(idx, np.cumsum(counts)[:-1])):
            buckets[client].append(part)

    return [
        ClientShard(
            client_id=shard.client_id,
            indices=np.sort(np.concatenate(parts)) if parts else np.empty(0, np.int64),
        )
        for shard, parts in zip(shards, buckets)
    ]
