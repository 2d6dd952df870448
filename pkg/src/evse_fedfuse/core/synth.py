"""데이터셋 없이 파이프라인을 돌리기 위한 합성 페어 데이터 생성기.

coupling="independent"
    각 모달리티가 클래스별로 다른 방향의 평균을 가진다.
    한 모달리티만으로도 세 클래스가 선형 분리된다.
coupling="joint-only"
    두 모달리티에 부호 인자 s1, s2 ∈ {−1, +1}을 하나씩 심는다.
        Benign = (+,+) 또는 (−,−),  DoS = (+,−),  Recon = (−,+)
    한 모달리티만 보면 Benign이 DoS/Recon과 구분되지 않아 정확도가 약 2/3에 묶인다.
    두 모달리티를 함께 보면 선형으로도 분리된다.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from evse_fedfuse.core.dataset import PairedDataset
from evse_fedfuse.errors import DimensionError
from evse_fedfuse.models.labels import CLASS_NAMES, N_CLASSES, AttackClass

SIGNAL_AMPLITUDE = 1.0
NUISANCE_SCALE = 0.5
N_NUISANCE = 2
LABEL_COLUMN = "Scenario"

# (s1, s2) 후보. Benign은 두 조합 중 하나를 고른다.
_JOINT_SIGNS = {
    AttackClass.BENIGN: ((1.0, 1.0), (-1.0, -1.0)),
    AttackClass.DOS: ((1.0, -1.0),),
    AttackClass.RECON: ((-1.0, 1.0),),
}


def _basis(d: int, rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    return q


def _modality(
    signal_dirs: np.ndarray,
    coeffs: np.ndarray,
    nuisance_dirs: np.ndarray,
    noise_std: float,
    rng: np.random.Generator,
) -> np.ndarray:
    n = coeffs.shape[0]
    d = signal_dirs.shape[0]
    x = coeffs @ signal_dirs.T
    if nuisance_dirs.shape[1]:
        factors = rng.normal(scale=NUISANCE_SCALE, size=(n, nuisance_dirs.shape[1]))
        x = x + factors @ nuisance_dirs.T
    return x + rng.normal(scale=noise_std, size=(n, d))


def synth_generate(
    n_per_class: int,
    d1: int,
    d2: int,
    coupling: str = "joint-only",
    noise_std: float = 0.1,
    seed: int = 0,
) -> PairedDataset:
    """클래스당 ``n_per_class``개의 네트워크/커널 특성 쌍을 만든다.

    같은 인자와 시드면 비트 단위로 같은 데이터가 나온다.
    """
    if n_per_class < 10:
        raise DimensionError(f"n_per_class는 10 이상이어야 합니다: {n_per_class}")
    if min(d1, d2) < N_CLASSES:
        raise DimensionError(f"모달리티 차원은 {N_CLASSES} 이상이어야 합니다: {d1}, {d2}")
    if coupling not in ("independent", "joint-only"):
        raise DimensionError(f"알 수 없는 coupling: {coupling!r}")

    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.repeat(np.arange(N_CLASSES), n_per_class))
    n = labels.size
    q_net = _basis(d1, rng)
    q_kernel = _basis(d2, rng)

    if coupling == "independent":
        onehot = np.eye(N_CLASSES)[labels] * SIGNAL_AMPLITUDE
        k1 = min(N_NUISANCE, d1 - N_CLASSES)
        k2 = min(N_NUISANCE, d2 - N_CLASSES)
        net = _modality(
            q_net[:, :N_CLASSES], onehot, q_net[:, N_CLASSES : N_CLASSES + k1],
            noise_std, rng,
        )
        kernel = _modality(
            q_kernel[:, :N_CLASSES], onehot,
            q_kernel[:, N_CLASSES : N_CLASSES + k2], noise_std, rng,
        )
    else:
        signs = np.empty((n, 2))
        choice = rng.integers(0, 2, size=n)
        for cls, options in _JOINT_SIGNS.items():
            mask = labels == cls
            picks = np.asarray(options)[choice[mask] % len(options)]
            signs[mask] = picks
        k1 = min(N_NUISANCE, d1 - 1)
        k2 = min(N_NUISANCE, d2 - 1)
        net = _modality(
            q_net[:, :1], signs[:, :1] * SIGNAL_AMPLITUDE, q_net[:, 1 : 1 + k1],
            noise_std, rng,
        )
        kernel = _modality(
            q_kernel[:, :1], signs[:, 1:] * SIGNAL_AMPLITUDE,
            q_kernel[:, 1 : 1 + k2], noise_std, rng,
        )

    return PairedDataset(
        net_features=net,
        kernel_features=kernel,
        labels=labels.astype(np.int64),
        pairing_seed=seed,
        net_feature_names=tuple(f"net_f{i:02d}" for i in range(d1)),
        kernel_feature_names=tuple(f"hpc_f{i:02d}" for i in range(d2)),
    )


def to_frames(ds: PairedDataset) -> tuple[pd.DataFrame, pd.DataFrame]:
    """CSV로 내보낼 수 있도록 모달리티별 DataFrame을 만든다 (라벨 열 Scenario)."""
    names = np.asarray(CLASS_NAMES)[ds.labels]
    net = pd.DataFrame(ds.net_features, columns=list(ds.net_feature_names))
    net[LABEL_COLUMN] = names
    kernel = pd.DataFrame(ds.kernel_features, columns=list(ds.kernel_feature_names))
    kernel[LABEL_COLUMN] = names
    return net, kernel
