"""모델 묶음(AE + CNN) 평가: encode → fuse → predict → 지표."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from evse_fedfuse.core.classifier import CnnModel, predict
from evse_fedfuse.core.dataset import ClientShard, PairedDataset
from evse_fedfuse.core.encoder import AutoencoderModel, FusedDataset, encode, fuse
from evse_fedfuse.core.metrics import (
    ConfusionMatrix,
    MetricsReport,
    compute_metrics,
    confusion,
)
from evse_fedfuse.errors import EvaluationError
from evse_fedfuse.models.labels import Modality

GLOBAL_SCOPE = "global"
FUSED = (Modality.NETWORK, Modality.KERNEL)


def encode_with(
    autoencoders: Mapping[Modality, AutoencoderModel],
    ds: PairedDataset,
    modalities: Sequence[Modality] = FUSED,
) -> FusedDataset:
    """모달리티 순서대로 인코딩해 이어 붙인다."""
    blocks = []
    for modality in modalities:
        ae = autoencoders.get(modality)
        if ae is None:
            raise EvaluationError(f"{modality.value} 오토인코더가 없습니다.")
        blocks.append(encode(ae, ds.features(modality)))
    return FusedDataset(fuse(*blocks), ds.labels)


@dataclass
class ModelBundle:
    """한 주체(중앙 서버 또는 충전소)의 오토인코더들과 분류기."""

    autoencoders: dict[Modality, AutoencoderModel]
    cnn: CnnModel
    modalities: tuple[Modality, ...] = FUSED

    def encode(self, ds: PairedDataset) -> FusedDataset:
        return encode_with(self.autoencoders, ds, self.modalities)

    def confusion(self, ds: PairedDataset) -> ConfusionMatrix:
        if len(ds) == 0:
            return ConfusionMatrix.empty(self.cnn.config.n_classes)
        fused = self.encode(ds)
        pred = predict(self.cnn, fused.features)
        return confusion(fused.labels, pred, self.cnn.config.n_classes)

    @property
    def parameter_counts(self) -> dict[str, int]:
        counts = {"cnn": self.cnn.parameter_count}
        for modality in self.modalities:
            ae = self.autoencoders.get(modality)
            if ae is not None:
                counts[f"autoencoder_{modality.value}"] = ae.params.count
        return counts


def client_scope(client_id: int) -> str:
    return f"client_{client_id}"


def evaluate(
    bundles: ModelBundle | Sequence[ModelBundle],
    test: PairedDataset,
    scope: str = GLOBAL_SCOPE,
    shards: Sequence[ClientShard] | None = None,
) -> dict[str, MetricsReport]:
    """scope="global"이면 {"global": report}.

    scope="per-client"이면 충전소별 테스트 조각을 그 충전소의 묶음으로 평가하고,
    혼동 행렬을 합친 결과를 "global"로 함께 돌려준다.
    묶음이 하나뿐이면 모든 충전소에 같은 묶음을 쓴다.
    """
    if isinstance(bundles, ModelBundle):
        bundles = [bundles]
    if not bundles:
        raise EvaluationError("평가할 모델이 없습니다.")

    if scope == GLOBAL_SCOPE:
        return {GLOBAL_SCOPE: compute_metrics(bundles[0].confusion(test))}
    if scope != "per-client":
        raise EvaluationError(f"알 수 없는 scope: {scope!r}")
    if not shards:
        raise EvaluationError("per-client 평가에는 충전소별 테스트 조각이 필요합니다.")
    if len(bundles) not in (1, len(shards)):
        raise EvaluationError(
            f"모델 묶음 {len(bundles)}개와 충전소 {len(shards)}개가 맞지 않습니다."
        )

    reports: dict[str, MetricsReport] = {}
    pooled = ConfusionMatrix.empty(bundles[0].cnn.config.n_classes)
    for i, shard in enumerate(shards):
        bundle = bundles[i] if len(bundles) > 1 else bundles[0]
        cm = bundle.confusion(test.subset(shard.indices))
        pooled = pooled + cm
        if cm.total:
            reports[client_scope(shard.client_id)] = compute_metrics(cm)
    reports[GLOBAL_SCOPE] = compute_metrics(pooled)
    return reports
