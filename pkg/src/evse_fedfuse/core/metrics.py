"""혼동 행렬 기반 평가 지표.

모든 지표는 백분율(0–100)이다. 0/0은 0으로 두고, 실제 표본이 없는
클래스는 ``degenerate=True``로 표시한다.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from evse_fedfuse.errors import EvaluationError, LabelError
from evse_fedfuse.models.labels import CLASS_NAMES, N_CLASSES, AttackClass
from evse_fedfuse.utils.io import write_csv, write_json

METRIC_COLUMNS = [
    "scope",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "precision_macro",
    "recall_macro",
    "f1_macro",
    "fpr_binary",
    "n_samples",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    """행 = 실제 클래스, 열 = 예측 클래스."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        c = self.counts
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise EvaluationError(f"혼동 행렬은 정사각이어야 합니다: {c.shape}")
        if np.any(c < 0):
            raise EvaluationError("혼동 행렬에 음수 값이 있습니다.")

    @classmethod
    def empty(cls, n_classes: int = N_CLASSES) -> ConfusionMatrix:
        return cls(np.zeros((n_classes, n_classes), dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        if self.counts.shape != other.counts.shape:
            raise EvaluationError(
                f"혼동 행렬 크기가 다릅니다: {self.counts.shape} vs {other.counts.shape}"
            )
        return ConfusionMatrix(self.counts + other.counts)


def confusion(
    y_true: np.ndarray, y_pred: np.ndarray, n_classes: int = N_CLASSES
) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise EvaluationError(
            f"y_true{y_true.shape}와 y_pred{y_pred.shape}의 길이가 다릅니다."
        )
    for name, labels in (("y_true", y_true), ("y_pred", y_pred)):
        if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
            raise LabelError(f"{name}에 0..{n_classes - 1} 범위 밖 라벨이 있습니다.")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts)


class ClassMetrics(BaseModel):
    name: str
    precision: float
    recall: float
    f1: float
    fpr: float
    support: int
    degenerate: bool


class MetricsReport(BaseModel):
    """가중 평균(헤드라인)과 macro 평균, 이진 FPR, 클래스별 지표."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    fpr_binary: float
    per_class: list[ClassMetrics]
    n_samples: int
    confusion: list[list[int]]


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    total = cm.total
    if total == 0:
        raise EvaluationError("표본이 없는 혼동 행렬로는 지표를 계산할 수 없습니다.")
    c = cm.counts
    tp = np.diag(c).astype(np.float64)
    support = c.sum(axis=1)
    predicted = c.sum(axis=0)
    fp = predicted - tp
    fn = support - tp
    tn = total - tp - fp - fn

    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, support)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    fpr = _safe_div(fp, fp + tn)
    weights = support / total

    benign = AttackClass.BENIGN
    benign_as_attack = support[benign] - c[benign, benign]

    names = CLASS_NAMES if len(CLASS_NAMES) == c.shape[0] else [
        str(i) for i in range(c.shape[0])
    ]
    per_class = [
        ClassMetrics(
            name=names[i],
            precision=100.0 * precision[i],
            recall=100.0 * recall[i],
            f1=100.0 * f1[i],
            fpr=100.0 * fpr[i],
            support=int(support[i]),
            degenerate=bool(support[i] == 0),
        )
        for i in range(c.shape[0])
    ]
    return MetricsReport(
        accuracy=100.0 * float(tp.sum()) / total,
        precision=100.0 * float(weights @ precision),
        recall=100.0 * float(weights @ recall),
        f1=100.0 * float(weights @ f1),
        precision_macro=100.0 * float(precision.mean()),
        recall_macro=100.0 * float(recall.mean()),
        f1_macro=100.0 * float(f1.mean()),
        fpr_binary=100.0 * float(_safe_div(benign_as_attack, support[benign])),
        per_class=per_class,
        n_samples=total,
        confusion=c.tolist(),
    )


def metrics_to_rows(reports: Mapping[str, MetricsReport]) -> list[dict]:
    """scope마다 한 행 (CSV용)."""
    rows = []
    for scope, report in reports.items():
        data = report.model_dump(exclude={"per_class", "confusion"})
        rows.append({"scope": scope, **data})
    return rows


def write_metrics(
    out_dir: Path, reports: Mapping[str, MetricsReport], extra: Mapping | None = None
) -> None:
    """metrics.json (전체)과 metrics.csv (scope별 헤드라인)를 쓴다."""
    document = {scope: r.model_dump() for scope, r in reports.items()}
    if extra:
        document = {**dict(extra), "reports": document}
    write_json(out_dir / "metrics.json", document)
    write_csv(out_dir / "metrics.csv", metrics_to_rows(reports), METRIC_COLUMNS)
