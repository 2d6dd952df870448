"""세 가지 비교 실험 프로토콜.

fusion-vs-single
    같은 오토인코더 위에서 융합(64) / 네트워크만(32) / 커널만(32) CNN을 비교한다.
centralized-vs-federated
    같은 epoch 예산의 중앙집중 모델과 연합 모델을 충전소별로 나란히 평가한다.
client-sweep
    충전소 수를 바꿔 가며 연합 학습 결과를 비교한다.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field

from evse_fedfuse.core.evaluation import FUSED, GLOBAL_SCOPE, evaluate
from evse_fedfuse.core.federated import RoundReport, budget_matched
from evse_fedfuse.core.metrics import MetricsReport, write_metrics
from evse_fedfuse.core.pipeline import (
    PreparedData,
    centralized_arm,
    fed_config,
    federated_arm,
    train_autoencoders,
)
from evse_fedfuse.core.run_paths import RunPaths
from evse_fedfuse.errors import ConfigError, ExperimentError, FedFuseError
from evse_fedfuse.models.config import ExperimentConfig
from evse_fedfuse.models.labels import Modality
from evse_fedfuse.utils.io import write_csv, write_jsonl
from evse_fedfuse.utils.seeding import derive_seed

logger = logging.getLogger(__name__)

EXPERIMENTS = ("fusion-vs-single", "centralized-vs-federated", "client-sweep")

_HEADLINE = ("accuracy", "precision", "recall", "f1", "fpr_binary")


@dataclass
class ExperimentResult:
    name: str
    columns: list[str]
    rows: list[dict]
    reports: dict[str, MetricsReport] = field(default_factory=dict)
    rounds: dict[str, list[RoundReport]] = field(default_factory=dict)
    parameter_counts: dict[str, dict[str, int]] = field(default_factory=dict)


@contextmanager
def _arm(name: str) -> Iterator[None]:
    try:
        yield
    except ExperimentError:
        raise
    except FedFuseError as e:
        raise ExperimentError(name, str(e)) from e


def _headline(report: MetricsReport, prefix: str = "") -> dict:
    return {f"{prefix}{key}": getattr(report, key) for key in _HEADLINE}


def fusion_vs_single(
    config: ExperimentConfig, prepared: PreparedData, jobs: int | None = None
) -> ExperimentResult:
    with _arm("autoencoders"):
        aes = train_autoencoders(
            prepared.train, config, derive_seed(config.seed, "ae", "central"),
            FUSED, jobs,
        )
    arms = (
        ("fused", FUSED),
        ("network", (Modality.NETWORK,)),
        ("kernel", (Modality.KERNEL,)),
    )
    result = ExperimentResult(
        "fusion-vs-single", ["arm", *_HEADLINE], rows=[]
    )
    for name, modalities in arms:
        with _arm(name):
            arm = centralized_arm(
                prepared, config, autoencoders=aes, modalities=modalities, name=name
            )
        result.reports[name] = arm.metrics
        result.rows.append({"arm": name, **_headline(arm.metrics)})
        result.parameter_counts[name] = arm.bundle.parameter_counts
    return result


def centralized_vs_federated(
    config: ExperimentConfig, prepared: PreparedData, jobs: int | None = None
) -> ExperimentResult:
    fed = fed_config(config)
    with _arm("centralized"):
        central = centralized_arm(prepared, config, budget_matched(fed), jobs=jobs)
    with _arm("federated"):
        federated = federated_arm(prepared, config, fed.n_clients, jobs)
        central_reports = evaluate(
            central.bundle, prepared.test, "per-client", federated.test_shards
        )

    columns = [
        "scope",
        "n_samples",
        *(f"centralized_{k}" for k in _HEADLINE),
        *(f"federated_{k}" for k in _HEADLINE),
    ]
    result = ExperimentResult("centralized-vs-federated", columns, rows=[])
    # 충전소 행을 id 순서로, 전체 행을 마지막에
    scopes = [s for s in federated.reports if s != GLOBAL_SCOPE] + [GLOBAL_SCOPE]
    for scope in scopes:
        fed_report = federated.reports[scope]
        central_report = central_reports[scope]
        result.rows.append({
            "scope": scope,
            "n_samples": fed_report.n_samples,
            **_headline(central_report, "centralized_"),
            **_headline(fed_report, "federated_"),
        })
        result.reports[f"centralized/{scope}"] = central_report
        result.reports[f"federated/{scope}"] = fed_report
    result.rounds["federated"] = federated.rounds
    result.parameter_counts["centralized"] = central.bundle.parameter_counts
    result.parameter_counts["federated"] = federated.bundles[0].parameter_counts
    return result


def client_sweep(
    config: ExperimentConfig, prepared: PreparedData, jobs: int | None = None
) -> ExperimentResult:
    if not config.client_counts:
        raise ConfigError("client_counts가 비어 있습니다.")
    result = ExperimentResult("client-sweep", ["clients", *_HEADLINE], rows=[])
    for n in config.client_counts:
        name = f"clients_{n}"
        with _arm(name):
            arm = federated_arm(prepared, config, n, jobs, name=name)
        result.reports[name] = arm.metrics
        result.rows.append({"clients": n, **_headline(arm.metrics)})
        result.rounds[name] = arm.rounds
        result.parameter_counts[name] = arm.bundles[0].parameter_counts
    return result


_PROTOCOLS = {
    "fusion-vs-single": fusion_vs_single,
    "centralized-vs-federated": centralized_vs_federated,
    "client-sweep": client_sweep,
}


def run_experiment(
    name: str,
    config: ExperimentConfig,
    prepared: PreparedData,
    jobs: int | None = None,
) -> ExperimentResult:
    protocol = _PROTOCOLS.get(name)
    if protocol is None:
        raise ConfigError(f"알 수 없는 실험: {name!r} (가능: {', '.join(EXPERIMENTS)})")
    logger.info("실험 시작: %s", name)
    return protocol(config, prepared, jobs)


def write_experiment(result: ExperimentResult, paths: RunPaths) -> None:
    """metrics.json, metrics.csv, <실험>.csv, rounds.jsonl을 쓴다."""
    write_metrics(
        paths.out_dir,
        result.reports,
        extra={"experiment": result.name, "parameter_counts": result.parameter_counts},
    )
    write_csv(paths.table_csv(result.name), result.rows, result.columns)
    records = [
        {"arm": arm, **report.to_record()}
        for arm, reports in result.rounds.items()
        for report in reports
    ]
    if records:
        write_jsonl(paths.rounds_log, records)
