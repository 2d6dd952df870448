"""데이터 준비와 학습 arm 조립.

모든 하위 시드는 ``ExperimentConfig.seed``에서 태그로 파생한다.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from evse_fedfuse.core.checkpoint import load_autoencoder, load_cnn, save_checkpoint
from evse_fedfuse.core.classifier import TrainHistory
from evse_fedfuse.core.dataset import (
    ClientShard,
    IngestReport,
    NormStats,
    PairedDataset,
    load_csv,
    normalize_pair,
    normalize_paired_with,
    pair_modalities,
    partition_clients,
    partition_like,
    split,
)
from evse_fedfuse.core.encoder import AutoencoderModel, train_autoencoder
from evse_fedfuse.core.evaluation import (
    FUSED,
    GLOBAL_SCOPE,
    ModelBundle,
    encode_with,
    evaluate,
)
from evse_fedfuse.core.federated import (
    RoundReport,
    StationClient,
    run_centralized,
    run_federated,
)
from evse_fedfuse.core.metrics import MetricsReport
from evse_fedfuse.core.run_paths import RunPaths
from evse_fedfuse.core.synth import synth_generate
from evse_fedfuse.errors import CheckpointError, ConfigError
from evse_fedfuse.models.config import (
    CnnConfig,
    ExperimentConfig,
    FedConfig,
    SynthSpec,
    TrainConfig,
)
from evse_fedfuse.models.labels import Modality, cicevse_schema
from evse_fedfuse.nn.tensor import resolve_dtype
from evse_fedfuse.utils.seeding import derive_seed

logger = logging.getLogger(__name__)


@dataclass
class PreparedData:
    """분할된 원시 데이터와 학습 분할 통계로 정규화한 데이터."""

    raw_train: PairedDataset
    raw_test: PairedDataset
    train: PairedDataset
    test: PairedDataset
    norm_stats: dict[Modality, NormStats]
    ingest_reports: list[IngestReport] = field(default_factory=list)


def model_dtype(config: ExperimentConfig) -> np.dtype:
    return resolve_dtype(config.precision)


def load_sources(config: ExperimentConfig) -> tuple[PairedDataset, list[IngestReport]]:
    """CSV 두 개를 읽어 짝짓거나, 합성 데이터를 만든다."""
    data = config.data
    if data.uses_csv:
        if data.net_path is None or data.kernel_path is None:
            raise ConfigError("네트워크/커널 CSV 경로가 모두 필요합니다.")
        net, net_report = load_csv(
            data.net_path, data.net_schema or cicevse_schema(Modality.NETWORK),
            Modality.NETWORK,
        )
        kernel, kernel_report = load_csv(
            data.kernel_path, data.kernel_schema or cicevse_schema(Modality.KERNEL),
            Modality.KERNEL,
        )
        paired = pair_modalities(
            net, kernel, data.cap_per_class, seed=derive_seed(config.seed, "pair")
        )
        return paired, [net_report, kernel_report]

    spec = data.synth or SynthSpec()
    seed = spec.seed if spec.seed is not None else derive_seed(config.seed, "synth")
    paired = synth_generate(
        spec.n_per_class, spec.d1, spec.d2, spec.coupling, spec.noise_std, seed
    )
    return paired, []


def prepare_data(config: ExperimentConfig) -> PreparedData:
    paired, reports = load_sources(config)
    raw_train, raw_test = split(
        paired, config.data.test_fraction, seed=derive_seed(config.seed, "split")
    )
    train, test, stats = normalize_pair(raw_train, raw_test)
    logger.info(
        "데이터: train %d / test %d (net d=%d, kernel d=%d)",
        len(train),
        len(test),
        train.net_features.shape[1],
        train.kernel_features.shape[1],
    )
    return PreparedData(raw_train, raw_test, train, test, stats, reports)


def train_config(config: ExperimentConfig) -> TrainConfig:
    return config.train.model_copy(
        update={"seed": derive_seed(config.seed, "train", config.train.seed)}
    )


def fed_config(config: ExperimentConfig, n_clients: int | None = None) -> FedConfig:
    return config.fed.model_copy(
        update={
            "n_clients": n_clients or config.fed.n_clients,
            "seed": derive_seed(config.seed, "fed", config.fed.seed),
        }
    )


def cnn_config_for(
    config: ExperimentConfig, modalities: Sequence[Modality]
) -> CnnConfig:
    """입력 폭을 latent_dim × 모달리티 수로 맞춘 CNN 설정."""
    width = config.autoencoder.latent_dim * len(modalities)
    try:
        data = {**config.cnn.model_dump(), "input_length": width}
        return CnnConfig.model_validate(data)
    except ValueError as e:
        raise ConfigError(f"입력 폭 {width}에 맞는 CNN 설정이 아닙니다:\n{e}") from e


def train_autoencoders(
    train: PairedDataset,
    config: ExperimentConfig,
    shuffle_seed: int,
    modalities: Sequence[Modality] = FUSED,
    jobs: int | None = None,
) -> dict[Modality, AutoencoderModel]:
    """모달리티별 오토인코더를 동시에 학습한다. 초기 가중치는 (seed, 모달리티)로 고정."""
    dtype = model_dtype(config)

    def fit(modality: Modality) -> AutoencoderModel:
        model, _ = train_autoencoder(
            train.features(modality),
            config.autoencoder,
            seed=derive_seed(shuffle_seed, modality.value),
            modality=modality,
            init_seed=derive_seed(config.seed, "ae-init", modality.value),
            dtype=dtype,
        )
        return model

    workers = max(1, min(len(modalities), jobs or len(modalities)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        models = list(pool.map(fit, modalities))
    return dict(zip(modalities, models))


# --- arms ------------------------------------------------------------------


@dataclass
class CentralizedArm:
    name: str
    bundle: ModelBundle
    history: TrainHistory
    metrics: MetricsReport


def centralized_arm(
    prepared: PreparedData,
    config: ExperimentConfig,
    train_cfg: TrainConfig | None = None,
    autoencoders: dict[Modality, AutoencoderModel] | None = None,
    modalities: Sequence[Modality] = FUSED,
    name: str = "centralized",
    jobs: int | None = None,
) -> CentralizedArm:
    """풀링된 학습 데이터로 AE와 CNN을 학습하고 전체 테스트 분할로 평가한다."""
    modalities = tuple(modalities)
    if autoencoders is None:
        autoencoders = train_autoencoders(
            prepared.train, config, derive_seed(config.seed, "ae", "central"),
            modalities, jobs,
        )
    fused_train = encode_with(autoencoders, prepared.train, modalities)
    result = run_centralized(
        train_cfg or train_config(config),
        fused_train,
        cnn_config=cnn_config_for(config, modalities),
        dtype=model_dtype(config),
        init_seed=derive_seed(config.seed, "cnn-init"),
    )
    bundle = ModelBundle(
        {m: autoencoders[m] for m in modalities}, result.model, modalities
    )
    metrics = evaluate(bundle, prepared.test)[GLOBAL_SCOPE]
    logger.info(
        "[%s] accuracy %.2f%%, FPR %.2f%%", name, metrics.accuracy, metrics.fpr_binary
    )
    return CentralizedArm(name, bundle, result.history, metrics)


@dataclass
class FederatedArm:
    name: str
    bundles: list[ModelBundle]
    rounds: list[RoundReport]
    train_shards: list[ClientShard]
    test_shards: list[ClientShard]
    reports: dict[str, MetricsReport]

    @property
    def metrics(self) -> MetricsReport:
        return self.reports[GLOBAL_SCOPE]


def client_train_shards(
    train: PairedDataset, config: ExperimentConfig, n_clients: int
) -> list[ClientShard]:
    return partition_clients(
        train, n_clients, config.fed.scheme,
        seed=derive_seed(config.seed, "partition"), alpha=config.fed.alpha,
    )


def client_test_shards(
    test: PairedDataset, train: PairedDataset, train_shards: Sequence[ClientShard],
    config: ExperimentConfig,
) -> list[ClientShard]:
    """각 충전소의 테스트 조각이 그 충전소 학습 조각의 클래스 비율을 따르게 나눈다."""
    return partition_like(
        test, train, train_shards, seed=derive_seed(config.seed, "test")
    )


def federated_arm(
    prepared: PreparedData,
    config: ExperimentConfig,
    n_clients: int | None = None,
    jobs: int | None = None,
    name: str = "federated",
) -> FederatedArm:
    """충전소별로 AE를 로컬 학습하고 CNN만 연합 학습한다."""
    fed = fed_config(config, n_clients)
    train_shards = client_train_shards(prepared.train, config, fed.n_clients)
    test_shards = client_test_shards(
        prepared.test, prepared.train, train_shards, config
    )

    def build(shards: tuple[ClientShard, ClientShard]):
        train_shard, test_shard = shards
        local_train = prepared.train.subset(train_shard.indices)
        local_test = prepared.test.subset(test_shard.indices)
        aes = train_autoencoders(
            local_train, config,
            derive_seed(config.seed, "ae", "client", train_shard.client_id),
            jobs=1,
        )
        client = StationClient(
            train_shard.client_id,
            encode_with(aes, local_train),
            encode_with(aes, local_test),
        )
        return aes, client

    with ThreadPoolExecutor(max_workers=jobs or None) as pool:
        built = list(pool.map(build, zip(train_shards, test_shards)))

    result = run_federated(
        fed,
        [client for _, client in built],
        cnn_config_for(config, FUSED),
        dtype=model_dtype(config),
        jobs=jobs,
        init_seed=derive_seed(config.seed, "cnn-init"),
    )
    bundles = [ModelBundle(aes, result.model, FUSED) for aes, _ in built]
    reports = evaluate(bundles, prepared.test, "per-client", test_shards)
    logger.info(
        "[%s] %d clients: accuracy %.2f%%, FPR %.2f%%",
        name,
        fed.n_clients,
        reports[GLOBAL_SCOPE].accuracy,
        reports[GLOBAL_SCOPE].fpr_binary,
    )
    return FederatedArm(
        name, bundles, result.rounds, train_shards, test_shards, reports
    )


# --- checkpoints -----------------------------------------------------------


def save_bundles(
    paths: RunPaths,
    bundles: Sequence[ModelBundle],
    norm_stats: dict[Modality, NormStats],
    federated: bool = False,
) -> None:
    """AE는 주체별로, CNN은 하나만 저장한다."""
    paths.ensure()
    for client_id, bundle in enumerate(bundles):
        for modality, ae in bundle.autoencoders.items():
            target = paths.ae_checkpoint(modality, client_id if federated else None)
            save_checkpoint(target, ae, norm_stats[modality])
    save_checkpoint(paths.cnn_checkpoint(), bundles[0].cnn)


def load_bundles(
    paths: RunPaths, dtype=np.float64
) -> tuple[list[ModelBundle], dict[Modality, NormStats], list[int]]:
    """저장된 묶음과 정규화 통계, 충전소 id 목록(중앙 실행이면 빈 목록)을 읽는다."""
    if not paths.has_checkpoints():
        raise CheckpointError(f"체크포인트가 없습니다: {paths.checkpoints_dir}")
    cnn = load_cnn(paths.cnn_checkpoint(), dtype)
    client_ids = paths.client_ids()
    owners: list[int | None] = list(client_ids) or [None]

    bundles: list[ModelBundle] = []
    stats: dict[Modality, NormStats] = {}
    for owner in owners:
        aes: dict[Modality, AutoencoderModel] = {}
        for modality in Modality:
            target = paths.ae_checkpoint(modality, owner)
            if not target.is_file():
                continue
            ae, ae_stats = load_autoencoder(target, dtype)
            aes[modality] = ae
            if ae_stats is not None:
                stats.setdefault(modality, ae_stats)
        modalities = tuple(m for m in Modality if m in aes)
        if sum(aes[m].latent_dim for m in modalities) != cnn.config.input_length:
            raise CheckpointError(
                f"AE 잠재 폭 합이 CNN 입력 길이 {cnn.config.input_length}와 다릅니다."
            )
        bundles.append(ModelBundle(aes, cnn, modalities))
    return bundles, stats, client_ids


def evaluate_saved(
    paths: RunPaths, prepared: PreparedData, config: ExperimentConfig
) -> dict[str, MetricsReport]:
    """디스크의 체크포인트로 테스트 분할을 평가한다.

    정규화 통계도 체크포인트의 것을 쓴다.
    """
    bundles, stats, client_ids = load_bundles(paths, model_dtype(config))
    missing = [m.value for m in bundles[0].modalities if m not in stats]
    if missing:
        raise CheckpointError(f"정규화 통계가 없는 모달리티: {missing}")
    full_stats = {**prepared.norm_stats, **stats}
    test = normalize_paired_with(prepared.raw_test, full_stats)
    if client_ids:
        train_shards = client_train_shards(prepared.train, config, len(client_ids))
        shards = client_test_shards(test, prepared.train, train_shards, config)
        return evaluate(bundles, test, "per-client", shards)
    return evaluate(bundles[0], test)
