"""오토인코더와 융합 테스트."""

from __future__ import annotations

import inspect
import logging

import numpy as np
import pytest

from evse_fedfuse.core.encoder import (
    AutoencoderModel,
    FusedDataset,
    encode,
    encode_pair,
    fuse,
    train_autoencoder,
    unfuse,
)
from evse_fedfuse.errors import DimensionError, TrainingError
from evse_fedfuse.models.config import AutoencoderConfig
from evse_fedfuse.models.labels import Modality
from evse_fedfuse.nn.layers import Sequential

FAST = AutoencoderConfig(hidden=16, epochs=3, batch_size=16)


def whitened_gaussian(rng, n: int, d: int) -> np.ndarray:
    """표본 평균 0, 표본 공분산 I인 데이터."""
    x = rng.normal(size=(n, d))
    x -= x.mean(axis=0)
    eigvals, eigvecs = np.linalg.eigh(np.cov(x, rowvar=False, bias=True))
    return x @ eigvecs @ np.diag(eigvals**-0.5) @ eigvecs.T


class TestAutoencoderModel:
    """구조와 인코딩."""

    def test_shapes(self, rng):
        model = AutoencoderModel(10, FAST, Modality.NETWORK, seed=0)
        x = rng.normal(size=(7, 10))
        assert encode(model, x).shape == (7, 32)
        assert model.reconstruct(x).shape == (7, 10)

    def test_zero_encoder_gives_zero_latents(self, rng):
        model = AutoencoderModel(5, FAST, seed=0)
        for p in model.encoder.parameters():
            p.value[...] = 0.0
        np.testing.assert_array_equal(encode(model, rng.normal(size=(4, 5))), 0.0)

    def test_latents_non_negative(self, rng):
        model = AutoencoderModel(6, FAST, seed=1)
        assert np.all(encode(model, rng.normal(size=(20, 6))) >= 0.0)

    def test_encode_matches_manual_forward(self, rng):
        model = AutoencoderModel(6, FAST, seed=2)
        x = rng.normal(size=(3, 6))
        p = model.params
        w0, b0 = p["encoder.0.weight"].value, p["encoder.0.bias"].value
        w1, b1 = p["encoder.1.weight"].value, p["encoder.1.bias"].value
        manual = np.maximum(np.maximum(x @ w0 + b0, 0) @ w1 + b1, 0)
        np.testing.assert_allclose(encode(model, x), manual, atol=1e-12)

    def test_encode_is_deterministic(self, rng):
        model = AutoencoderModel(6, FAST, seed=2)
        x = rng.normal(size=(3, 6))
        np.testing.assert_array_equal(encode(model, x), encode(model, x))

    def test_dimension_mismatch(self):
        model = AutoencoderModel(6, FAST, seed=0)
        with pytest.raises(DimensionError):
            encode(model, np.zeros((2, 5)))


class TestTrainAutoencoder:
    """학습."""

    def test_takes_no_labels(self):
        params = inspect.signature(train_autoencoder).parameters
        assert not any("label" in name for name in params)

    def test_constant_data_is_reconstructed(self, rng):
        row = rng.uniform(-1, 1, size=8)
        x = np.tile(row, (128, 1))
        cfg = AutoencoderConfig(hidden=16, epochs=50, batch_size=8, lr=1e-2)
        model, history = train_autoencoder(x, cfg, seed=0)
        assert float(np.mean((model.reconstruct(x) - x) ** 2)) <= 1e-3
        assert history[-1] < history[0]

    def test_same_seed_same_parameters(self, rng):
        x = rng.normal(size=(40, 6))
        a, _ = train_autoencoder(x, FAST, seed=5)
        b, _ = train_autoencoder(x, FAST, seed=5)
        np.testing.assert_array_equal(a.params.to_vector(), b.params.to_vector())

    def test_init_seed_controls_initial_weights(self, rng):
        x = rng.normal(size=(40, 6))
        cfg = FAST.model_copy(update={"lr": 0.0})
        a, _ = train_autoencoder(x, cfg, seed=1, init_seed=9)
        b, _ = train_autoencoder(x, cfg, seed=2, init_seed=9)
        np.testing.assert_array_equal(a.params.to_vector(), b.params.to_vector())

    def test_history_length(self, rng):
        _, history = train_autoencoder(rng.normal(size=(30, 4)), FAST, seed=0)
        assert len(history) == FAST.epochs

    def test_batch_larger_than_data(self, rng):
        cfg = FAST.model_copy(update={"batch_size": 500})
        _, history = train_autoencoder(rng.normal(size=(10, 4)), cfg, seed=0)
        assert len(history) == cfg.epochs

    def test_inverted_compression_warns(self, rng, caplog):
        with caplog.at_level(logging.WARNING, logger="evse_fedfuse"):
            train_autoencoder(rng.normal(size=(20, 4)), FAST, seed=0)
        assert any("잠재 차원" in r.getMessage() for r in caplog.records)

    def test_empty_data(self):
        with pytest.raises(TrainingError):
            train_autoencoder(np.zeros((0, 4)), FAST)

    def test_identity_capacity_reconstructs_whitened_data(self, rng):
        x = whitened_gaussian(rng, 512, 32)
        cfg = AutoencoderConfig(latent_dim=64, epochs=200, batch_size=32, lr=2e-3)
        model, history = train_autoencoder(x, cfg, seed=0)
        # 선형 AE 하한: 버려지는 고유값 합 / d (latent ≥ d이면 0)
        eigvals = np.sort(np.linalg.eigvalsh(np.cov(x, rowvar=False, bias=True)))
        dropped = max(0, x.shape[1] - cfg.latent_dim)
        bound = float(eigvals[:dropped].sum()) / x.shape[1]
        mse = float(np.mean((model.reconstruct(x) - x) ** 2))
        assert mse <= bound + 0.1
        assert history[-1] < history[0]

    def test_encode_reproduces_final_epoch_latents(self, rng, monkeypatch):
        x = rng.normal(size=(24, 6))
        calls: list[tuple] = []
        original = Sequential.forward

        def recording_forward(self, inputs):
            out = original(self, inputs)
            params = [p.value.copy() for p in self.parameters()]
            calls.append((self, inputs.copy(), out.copy(), params))
            return out

        monkeypatch.setattr(Sequential, "forward", recording_forward)
        cfg = AutoencoderConfig(hidden=16, epochs=3, batch_size=64, lr=1e-2)
        model, _ = train_autoencoder(x, cfg, seed=4)
        monkeypatch.undo()

        batch, latents, params = next(
            (inputs, out, params)
            for module, inputs, out, params in reversed(calls)
            if module is model.encoder
        )
        assert batch.shape == x.shape
        for p, value in zip(model.encoder.parameters(), params):
            p.value[...] = value
        np.testing.assert_array_equal(encode(model, batch), latents)


class TestFuse:
    """잠재 벡터 결합."""

    def test_network_first(self):
        a = np.arange(32, dtype=np.float64)[None, :]
        b = np.arange(100, 132, dtype=np.float64)[None, :]
        z = fuse(a, b)
        assert z.shape == (1, 64)
        np.testing.assert_array_equal(z[0, :32], a[0])
        np.testing.assert_array_equal(z[0, 32:], b[0])

    def test_fuse_with_zeros(self, rng):
        a = rng.normal(size=(3, 32))
        z = fuse(a, np.zeros((3, 32)))
        np.testing.assert_array_equal(z[:, :32], a)
        np.testing.assert_array_equal(z[:, 32:], 0.0)

    def test_empty_rows(self):
        assert fuse(np.zeros((0, 32)), np.zeros((0, 32))).shape == (0, 64)

    def test_row_mismatch(self):
        with pytest.raises(DimensionError):
            fuse(np.zeros((2, 32)), np.zeros((3, 32)))

    def test_unfuse_inverts(self, rng):
        a, b = rng.normal(size=(4, 32)), rng.normal(size=(4, 32))
        back_a, back_b = unfuse(fuse(a, b))
        np.testing.assert_array_equal(back_a, a)
        np.testing.assert_array_equal(back_b, b)

    def test_unfuse_wrong_width(self):
        with pytest.raises(DimensionError):
            unfuse(np.zeros((1, 60)))

    def test_three_blocks(self, rng):
        blocks = [rng.normal(size=(2, n)) for n in (4, 5, 6)]
        parts = unfuse(fuse(*blocks), sizes=(4, 5, 6))
        for original, part in zip(blocks, parts):
            np.testing.assert_array_equal(part, original)

    def test_encode_pair(self, small_paired):
        net = AutoencoderModel(8, FAST, Modality.NETWORK, seed=0)
        kernel = AutoencoderModel(6, FAST, Modality.KERNEL, seed=1)
        fused = encode_pair(net, kernel, small_paired)
        assert isinstance(fused, FusedDataset)
        assert fused.width == 64
        net_latent = encode(net, small_paired.net_features)
        np.testing.assert_array_equal(fused.features[:, :32], net_latent)
        np.testing.assert_array_equal(fused.labels, small_paired.labels)
