"""dataset 모듈 테스트: CSV 적재, 정규화, 페어링, 분할, 클라이언트 분배."""

from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from evse_fedfuse.core.dataset import (
    ClientShard,
    ModalityDataset,
    NormStats,
    apply_norm,
    load_csv,
    normalize,
    normalize_pair,
    pair_modalities,
    partition_clients,
    partition_like,
    split,
)
from evse_fedfuse.core.synth import synth_generate
from evse_fedfuse.errors import (
    DimensionError,
    IngestError,
    PairingError,
    PartitionError,
    SplitError,
)
from evse_fedfuse.models.labels import CsvSchema, Modality, cicevse_schema


def make_modality(labels, d=2, seed=0, modality=Modality.NETWORK):
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    return ModalityDataset(modality, rng.normal(size=(labels.size, d)), labels)


class TestLoadCsv:
    """CSV 적재."""

    def test_counts_and_features(self, csv_file):
        frame = pd.DataFrame({
            "time": [1, 2, 3, 4, 5],
            "bytes": [1.0, 2.0, 3.0, 4.0, 5.0],
            "pkts": [5, 4, 3, 2, 1],
            "Scenario": ["Benign", "DoS", "Recon", "DoS", "Cryptojacking"],
        })
        path = csv_file("net.csv", frame)
        ds, report = load_csv(path, cicevse_schema(Modality.NETWORK), Modality.NETWORK)
        assert ds.feature_names == ("bytes", "pkts")
        assert report.rows_read == 5
        assert report.rows_skipped == 1
        assert report.rows_dropped == 0
        assert report.class_counts == {"Benign": 1, "DoS": 2, "Recon": 1}
        np.testing.assert_array_equal(ds.labels, [0, 1, 2, 1])

    def test_missing_values_dropped(self, csv_file):
        frame = pd.DataFrame({
            "a": [1.0, np.nan, 3.0, np.inf],
            "Scenario": ["Benign", "DoS", "Recon", "DoS"],
        })
        ds, report = load_csv(
            csv_file("x.csv", frame), CsvSchema(), Modality.KERNEL
        )
        assert report.rows_dropped == 2
        assert ds.n == 2

    def test_unknown_label_reports_row(self, csv_file):
        frame = pd.DataFrame(
            {"a": [1.0, 2.0, 3.0], "Scenario": ["Benign", "DoS", "Worm"]}
        )
        with pytest.raises(IngestError, match="Worm.*행 4"):
            load_csv(csv_file("bad.csv", frame), CsvSchema(), Modality.NETWORK)

    def test_missing_label_column(self, csv_file):
        frame = pd.DataFrame({"a": [1.0], "Label": ["Benign"]})
        with pytest.raises(IngestError, match="Scenario"):
            load_csv(csv_file("x.csv", frame), CsvSchema(), Modality.NETWORK)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(IngestError):
            load_csv(path, CsvSchema(), Modality.NETWORK)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError):
            load_csv(tmp_path / "nope.csv", CsvSchema(), Modality.NETWORK)

    def test_explicit_feature_columns(self, csv_file):
        frame = pd.DataFrame({
            "a": [1.0, 2.0], "b": [3.0, 4.0], "Scenario": ["Benign", "Recon"]
        })
        schema = CsvSchema(feature_columns=["b"])
        ds, _ = load_csv(csv_file("x.csv", frame), schema, Modality.NETWORK)
        np.testing.assert_array_equal(ds.features, [[3.0], [4.0]])

    def test_custom_label_map(self, csv_file):
        frame = pd.DataFrame({"a": [1.0, 2.0], "y": ["normal", "flood"]})
        schema = CsvSchema(label_column="y", label_value_map={"normal": 0, "flood": 1})
        ds, _ = load_csv(csv_file("x.csv", frame), schema, Modality.NETWORK)
        np.testing.assert_array_equal(ds.labels, [0, 1])


class TestNormalize:
    """z-score 정규화."""

    def test_train_stats(self):
        ds = ModalityDataset(
            Modality.NETWORK,
            np.array([[1.0, 5.0], [3.0, 5.0]]),
            np.array([0, 1]),
        )
        out = normalize(ds)
        np.testing.assert_allclose(out.features, [[-1.0, 0.0], [1.0, 0.0]])
        np.testing.assert_array_equal(out.norm_stats.std, [1.0, 0.0])

    def test_constant_count(self):
        ds = ModalityDataset(
            Modality.KERNEL,
            np.array([[1.0, 5.0, 0.0], [3.0, 5.0, 0.0], [2.0, 5.0, 0.0]]),
            np.array([0, 1, 2]),
        )
        assert normalize(ds).norm_stats.constant_count == 2

    def test_constant_feature_maps_to_zero(self):
        stats = NormStats(mean=np.array([2.0]), std=np.array([0.0]))
        out = apply_norm(np.array([[2.0], [7.0]]), stats)
        np.testing.assert_array_equal(out, [[0.0], [0.0]])

    def test_dimension_mismatch(self):
        stats = NormStats(mean=np.zeros(3), std=np.ones(3))
        with pytest.raises(DimensionError):
            apply_norm(np.zeros((2, 2)), stats)

    def test_pair_uses_train_statistics_only(self, small_paired):
        train, test = split(small_paired, 0.25, seed=1)
        norm_train, norm_test, stats = normalize_pair(train, test)
        means = norm_train.net_features.mean(axis=0)
        np.testing.assert_allclose(means, 0.0, atol=1e-12)
        np.testing.assert_allclose(
            stats[Modality.NETWORK].mean, train.net_features.mean(axis=0)
        )
        expected = (test.kernel_features - stats[Modality.KERNEL].mean) / stats[
            Modality.KERNEL
        ].std
        np.testing.assert_allclose(norm_test.kernel_features, expected)

    def test_stats_round_trip(self):
        stats = NormStats(mean=np.array([0.1, 1 / 3]), std=np.array([2.5, 1e-7]))
        back = NormStats.from_dict(stats.to_dict())
        np.testing.assert_array_equal(back.mean, stats.mean)
        np.testing.assert_array_equal(back.std, stats.std)


class TestPairModalities:
    """클래스 안 무작위 페어링."""

    def test_min_rule_and_cap(self):
        net = make_modality([0] * 5 + [1] * 3 + [2] * 4)
        kernel = make_modality(
            [0] * 2 + [1] * 6 + [2] * 4, d=3, modality=Modality.KERNEL
        )
        paired = pair_modalities(net, kernel, seed=0)
        assert paired.class_counts() == {"Benign": 2, "DoS": 3, "Recon": 4}
        capped = pair_modalities(net, kernel, per_class_cap=2, seed=0)
        assert capped.class_counts() == {"Benign": 2, "DoS": 2, "Recon": 2}

    def test_rows_are_not_reused(self):
        net = make_modality([0] * 4 + [1] * 4 + [2] * 4)
        kernel = make_modality([0] * 4 + [1] * 4 + [2] * 4, modality=Modality.KERNEL)
        paired = pair_modalities(net, kernel, seed=3)
        rows = {tuple(r) for r in paired.net_features}
        assert len(rows) == len(paired)

    def test_labels_agree(self):
        net = make_modality([0, 1, 2] * 5)
        kernel = make_modality([2, 1, 0] * 5, seed=1, modality=Modality.KERNEL)
        paired = pair_modalities(net, kernel, seed=0)
        for row, label in zip(paired.net_features, paired.labels):
            source = np.flatnonzero((net.features == row).all(axis=1))[0]
            assert net.labels[source] == label

    def test_class_set_mismatch(self):
        net = make_modality([0, 1, 2])
        kernel = make_modality([0, 1, 1], modality=Modality.KERNEL)
        with pytest.raises(PairingError, match="Recon"):
            pair_modalities(net, kernel)

    def test_deterministic(self):
        net = make_modality([0, 1, 2] * 6)
        kernel = make_modality([0, 1, 2] * 6, seed=2, modality=Modality.KERNEL)
        a = pair_modalities(net, kernel, seed=9)
        b = pair_modalities(net, kernel, seed=9)
        np.testing.assert_array_equal(a.kernel_features, b.kernel_features)


class TestSplit:
    """층화 분할."""

    def test_per_class_counts(self, small_paired):
        train, test = split(small_paired, 0.2, seed=0)
        assert test.class_counts() == {"Benign": 8, "DoS": 8, "Recon": 8}
        assert len(train) + len(test) == len(small_paired)

    def test_disjoint(self, small_paired):
        train, test = split(small_paired, 0.3, seed=2)
        train_rows = {tuple(r) for r in train.net_features}
        assert not any(tuple(r) in train_rows for r in test.net_features)

    def test_too_few_samples(self):
        net = make_modality([0, 1, 1, 2, 2])
        kernel = make_modality([0, 1, 1, 2, 2], modality=Modality.KERNEL)
        paired = pair_modalities(net, kernel)
        with pytest.raises(SplitError):
            split(paired, 0.2)

    def test_bad_fraction(self, small_paired):
        with pytest.raises(SplitError):
            split(small_paired, 1.0)


class TestPartitionClients:
    """클라이언트 분배."""

    @pytest.mark.parametrize("n_clients", [1, 3, 7, 10])
    def test_iid_covers_all_rows_once(self, small_paired, n_clients):
        shards = partition_clients(small_paired, n_clients, seed=4)
        joined = np.sort(np.concatenate([s.indices for s in shards]))
        np.testing.assert_array_equal(joined, np.arange(len(small_paired)))
        assert [s.client_id for s in shards] == list(range(n_clients))

    def test_iid_class_balance(self, small_paired):
        shards = partition_clients(small_paired, 7, seed=4)
        for c in range(3):
            labels = [small_paired.labels[s.indices] for s in shards]
            per_client = [int(np.sum(part == c)) for part in labels]
            assert max(per_client) - min(per_client) <= 1

    def test_iid_sizes_balanced(self, small_paired):
        sizes = [s.sample_count for s in partition_clients(small_paired, 7, seed=1)]
        assert max(sizes) - min(sizes) <= 1

    def test_label_skew_non_empty(self, small_paired):
        shards = partition_clients(
            small_paired, 5, scheme="label-skew", seed=2, alpha=0.5
        )
        assert all(s.sample_count > 0 for s in shards)
        assert sum(s.sample_count for s in shards) == len(small_paired)

    def test_too_many_clients(self, small_paired):
        with pytest.raises(PartitionError):
            partition_clients(small_paired, len(small_paired) + 1)

    def test_unknown_scheme(self, small_paired):
        with pytest.raises(PartitionError):
            partition_clients(small_paired, 2, scheme="round-robin")

    def test_deterministic(self):
        ds = synth_generate(20, 4, 4, coupling="independent", seed=0)
        a = partition_clients(ds, 4, scheme="label-skew", seed=8)
        b = partition_clients(ds, 4, scheme="label-skew", seed=8)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.indices, y.indices)


def class_counts_per_shard(ds, shards) -> list[list[int]]:
    return [
        [int(np.sum(ds.labels[s.indices] == c)) for c in range(3)] for s in shards
    ]


class TestPartitionLike:
    """학습 조각의 클래스 비율을 따르는 테스트 조각."""

    @pytest.fixture
    def held_out(self):
        return synth_generate(20, 8, 6, coupling="independent", seed=9)

    def test_follows_training_mix(self, small_paired, held_out):
        labels = small_paired.labels
        benign = np.flatnonzero(labels == 0)
        dos = np.flatnonzero(labels == 1)
        recon = np.flatnonzero(labels == 2)
        shards = [
            ClientShard(0, np.sort(np.concatenate([benign, dos[:10]]))),
            ClientShard(1, np.sort(np.concatenate([dos[10:], recon]))),
        ]
        out = partition_like(held_out, small_paired, shards, seed=1)
        assert class_counts_per_shard(held_out, out) == [[20, 5, 0], [0, 15, 20]]

    def test_unseen_class_follows_shard_size(self, small_paired, held_out):
        labels = small_paired.labels
        shards = [
            ClientShard(0, np.flatnonzero(labels == 0)[:30]),
            ClientShard(1, np.flatnonzero(labels == 1)[:10]),
        ]
        out = partition_like(held_out, small_paired, shards, seed=1)
        assert class_counts_per_shard(held_out, out) == [[20, 0, 15], [0, 20, 5]]

    def test_label_skew_covers_test_split(self, small_paired, held_out):
        shards = partition_clients(small_paired, 4, scheme="label-skew", seed=3)
        out = partition_like(held_out, small_paired, shards, seed=2)
        assert [s.client_id for s in out] == [0, 1, 2, 3]
        joined = np.sort(np.concatenate([s.indices for s in out]))
        np.testing.assert_array_equal(joined, np.arange(len(held_out)))

    def test_iid_shards_give_balanced_slices(self, small_paired, held_out):
        shards = partition_clients(small_paired, 3, seed=0)
        out = partition_like(held_out, small_paired, shards, seed=0)
        for c in range(3):
            per_client = [row[c] for row in class_counts_per_shard(held_out, out)]
            assert max(per_client) - min(per_client) <= 1

    def test_deterministic(self, small_paired, held_out):
        shards = partition_clients(small_paired, 3, seed=0)
        a = partition_like(held_out, small_paired, shards, seed=5)
        b = partition_like(held_out, small_paired, shards, seed=5)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.indices, y.indices)

    def test_no_shards(self, small_paired, held_out):
        with pytest.raises(PartitionError):
            partition_like(held_out, small_paired, [])
