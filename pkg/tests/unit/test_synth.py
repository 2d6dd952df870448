"""합성 데이터 생성기 테스트."""

from __future__ import annotations

import numpy as np
import pytest

from evse_fedfuse.core.synth import LABEL_COLUMN, synth_generate, to_frames
from evse_fedfuse.errors import DimensionError


def sign_estimates(ds):
    """클래스 평균 방향으로 두 모달리티의 부호 인자를 추정한다."""
    u = ds.net_features[ds.labels == 1].mean(axis=0)
    v = ds.kernel_features[ds.labels == 2].mean(axis=0)
    return np.sign(ds.net_features @ u), np.sign(ds.kernel_features @ v)


class TestSynthGenerate:
    """synth_generate."""

    def test_shapes_and_balance(self):
        ds = synth_generate(50, 12, 9, seed=0)
        assert ds.net_features.shape == (150, 12)
        assert ds.kernel_features.shape == (150, 9)
        assert ds.class_counts() == {"Benign": 50, "DoS": 50, "Recon": 50}
        assert ds.net_feature_names[0] == "net_f00"

    def test_deterministic(self):
        a = synth_generate(20, 6, 6, seed=4)
        b = synth_generate(20, 6, 6, seed=4)
        np.testing.assert_array_equal(a.net_features, b.net_features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_seed_changes_data(self):
        a = synth_generate(20, 6, 6, seed=4)
        b = synth_generate(20, 6, 6, seed=5)
        assert not np.array_equal(a.net_features, b.net_features)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_per_class": 5, "d1": 6, "d2": 6},
            {"n_per_class": 20, "d1": 2, "d2": 6},
            {"n_per_class": 20, "d1": 6, "d2": 6, "coupling": "early"},
        ],
    )
    def test_invalid_arguments(self, kwargs):
        with pytest.raises(DimensionError):
            synth_generate(**kwargs)

    def test_joint_only_benign_hidden_in_single_modality(self):
        ds = synth_generate(500, 10, 8, coupling="joint-only", noise_std=0.1, seed=1)
        benign = np.linalg.norm(ds.net_features[ds.labels == 0].mean(axis=0))
        dos = np.linalg.norm(ds.net_features[ds.labels == 1].mean(axis=0))
        assert benign < 0.2
        assert dos > 0.8

    def test_joint_only_needs_both_modalities(self):
        ds = synth_generate(500, 10, 8, coupling="joint-only", noise_std=0.1, seed=2)
        s1, s2 = sign_estimates(ds)
        joint = np.where(s1 == s2, 0, np.where(s1 > 0, 1, 2))
        assert np.mean(joint == ds.labels) >= 0.95

        # 한 모달리티 부호만 보면 다수결 규칙으로도 2/3 근처에 묶인다
        correct = 0
        for s in (-1.0, 1.0):
            correct += np.bincount(ds.labels[s1 == s], minlength=3).max()
        assert correct / len(ds) <= 0.70

    def test_independent_separates_per_modality(self):
        ds = synth_generate(200, 8, 8, coupling="independent", noise_std=0.1, seed=3)
        x = ds.net_features
        means = np.stack([x[ds.labels == c].mean(axis=0) for c in range(3)])
        dist = ((ds.net_features[:, None, :] - means[None]) ** 2).sum(axis=2)
        assert np.mean(dist.argmin(axis=1) == ds.labels) >= 0.95


class TestToFrames:
    """CSV 내보내기용 DataFrame."""

    def test_label_column(self):
        ds = synth_generate(10, 4, 3, seed=0)
        net, kernel = to_frames(ds)
        assert list(net.columns) == [*ds.net_feature_names, LABEL_COLUMN]
        assert set(kernel[LABEL_COLUMN]) == {"Benign", "DoS", "Recon"}
        assert len(net) == len(kernel) == 30
