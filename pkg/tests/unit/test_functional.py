"""functional 모듈 테스트: 단순 루프 구현과의 비교, 경계 조건."""

from __future__ import annotations

import math

import numpy as np
import pytest

from evse_fedfuse.errors import (
    DimensionError,
    EmptyOutputError,
    KernelSizeError,
    LabelError,
)
from evse_fedfuse.nn import functional as F

ORACLE_SEEDS = range(50)


def naive_dense(x, W, b):
    out = np.zeros((x.shape[0], W.shape[1]))
    for i in range(x.shape[0]):
        for j in range(W.shape[1]):
            s = b[j]
            for k in range(x.shape[1]):
                s += x[i, k] * W[k, j]
            out[i, j] = s
    return out


def naive_conv1d(x, filters, bias, stride):
    batch, channels, length = x.shape
    k_out, _, m_len = filters.shape
    out_len = (length - m_len) // stride + 1
    out = np.zeros((batch, k_out, out_len))
    for b in range(batch):
        for k in range(k_out):
            for p in range(out_len):
                s = bias[k]
                for c in range(channels):
                    for m in range(m_len):
                        s += filters[k, c, m] * x[b, c, p * stride + m]
                out[b, k, p] = s
    return out


def naive_maxpool(x, window):
    batch, channels, length = x.shape
    out_len = length // window
    out = np.zeros((batch, channels, out_len))
    for b in range(batch):
        for c in range(channels):
            for p in range(out_len):
                best = x[b, c, p * window]
                for m in range(1, window):
                    if x[b, c, p * window + m] > best:
                        best = x[b, c, p * window + m]
                out[b, c, p] = best
    return out


def naive_softmax(logits):
    out = np.zeros_like(logits)
    for i, row in enumerate(logits):
        top = max(row)
        exps = [math.exp(v - top) for v in row]
        total = sum(exps)
        out[i] = [e / total for e in exps]
    return out


class TestDenseOracle:
    """dense_forward와 루프 구현 비교."""

    @pytest.mark.parametrize("seed", ORACLE_SEEDS)
    def test_matches_naive(self, seed):
        rng = np.random.default_rng(seed)
        batch, n_in, n_out = rng.integers(1, 6, size=3)
        x = rng.normal(size=(batch, n_in))
        W = rng.normal(size=(n_in, n_out))
        b = rng.normal(size=n_out)
        np.testing.assert_allclose(
            F.dense_forward(x, W, b), naive_dense(x, W, b), rtol=0, atol=1e-12
        )

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            F.dense_forward(np.zeros((2, 3)), np.zeros((4, 2)), np.zeros(2))


class TestConv1dOracle:
    """conv1d_forward와 루프 구현 비교."""

    @pytest.mark.parametrize("seed", ORACLE_SEEDS)
    def test_matches_naive(self, seed):
        rng = np.random.default_rng(1000 + seed)
        batch = int(rng.integers(1, 4))
        channels = int(rng.integers(1, 4))
        length = int(rng.integers(3, 13))
        kernel = int(rng.integers(1, length + 1))
        stride = int(rng.integers(1, 4))
        k_out = int(rng.integers(1, 4))
        x = rng.normal(size=(batch, channels, length))
        filters = rng.normal(size=(k_out, channels, kernel))
        bias = rng.normal(size=k_out)
        np.testing.assert_allclose(
            F.conv1d_forward(x, filters, bias, stride),
            naive_conv1d(x, filters, bias, stride),
            rtol=0,
            atol=1e-12,
        )

    def test_kernel_longer_than_input(self):
        with pytest.raises(KernelSizeError):
            F.conv1d_forward(np.zeros((1, 1, 3)), np.zeros((1, 1, 4)), np.zeros(1))

    def test_output_length(self):
        assert F.conv1d_output_length(64, 5) == 60
        assert F.conv1d_output_length(30, 3) == 28
        assert F.conv1d_output_length(10, 3, stride=2) == 4

    def test_channel_mismatch(self):
        with pytest.raises(DimensionError):
            F.conv1d_forward(np.zeros((1, 2, 8)), np.zeros((1, 1, 3)), np.zeros(1))


class TestMaxPoolOracle:
    """maxpool1d_forward와 루프 구현 비교."""

    @pytest.mark.parametrize("seed", ORACLE_SEEDS)
    def test_matches_naive(self, seed):
        rng = np.random.default_rng(2000 + seed)
        batch, channels = rng.integers(1, 4, size=2)
        length = int(rng.integers(1, 13))
        window = int(rng.integers(1, length + 1))
        x = rng.normal(size=(batch, channels, length))
        out, _ = F.maxpool1d_forward(x, window)
        np.testing.assert_allclose(out, naive_maxpool(x, window), rtol=0, atol=1e-12)

    def test_window_larger_than_input(self):
        with pytest.raises(EmptyOutputError):
            F.maxpool1d_forward(np.zeros((1, 1, 3)), 4)

    def test_remainder_is_dropped(self):
        x = np.array([[[1.0, 5.0, 2.0, 3.0, 9.0]]])
        out, _ = F.maxpool1d_forward(x, 2)
        np.testing.assert_array_equal(out, [[[5.0, 3.0]]])

    def test_tie_routes_gradient_to_first(self):
        x = np.array([[[2.0, 2.0]]])
        out, argmax = F.maxpool1d_forward(x, 2)
        dx = F.maxpool1d_backward(np.ones_like(out), argmax, 2, 2)
        np.testing.assert_array_equal(dx, [[[1.0, 0.0]]])


class TestSoftmaxOracle:
    """softmax와 루프 구현 비교."""

    @pytest.mark.parametrize("seed", ORACLE_SEEDS)
    def test_matches_naive(self, seed):
        rng = np.random.default_rng(3000 + seed)
        batch = int(rng.integers(1, 6))
        classes = int(rng.integers(2, 6))
        logits = rng.normal(scale=5.0, size=(batch, classes))
        np.testing.assert_allclose(
            F.softmax(logits), naive_softmax(logits), rtol=0, atol=1e-12
        )

    def test_rows_sum_to_one_for_large_logits(self):
        probs = F.softmax(np.array([[1000.0, 0.0, -1000.0], [5.0, 5.0, 5.0]]))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(probs[1], [1 / 3, 1 / 3, 1 / 3], atol=1e-12)

    @pytest.mark.parametrize("shift", [-50.0, 0.5, 300.0])
    def test_row_shift_invariant(self, rng, shift):
        logits = rng.normal(size=(4, 3))
        offsets = shift * np.arange(1, 5)[:, None]
        np.testing.assert_allclose(
            F.softmax(logits + offsets), F.softmax(logits), rtol=0, atol=1e-12
        )

    def test_single_class_rejected(self):
        with pytest.raises(DimensionError):
            F.softmax(np.zeros((2, 1)))


class TestActivations:
    """ReLU 동작."""

    def test_relu(self):
        np.testing.assert_array_equal(
            F.relu(np.array([-1.0, 0.0, 2.0])), [0.0, 0.0, 2.0]
        )

    def test_relu_gradient_at_zero_is_zero(self):
        grad = F.relu_backward(np.array([-1.0, 0.0, 2.0]), np.ones(3))
        np.testing.assert_array_equal(grad, [0.0, 0.0, 1.0])


class TestLosses:
    """cross-entropy / MSE."""

    def test_cross_entropy_value(self):
        probs = np.array([[0.5, 0.25, 0.25], [0.1, 0.8, 0.1]])
        labels = np.array([[1.0, 0, 0], [0, 1.0, 0]])
        expected = -(math.log(0.5) + math.log(0.8)) / 2
        assert F.cross_entropy_loss(probs, labels) == pytest.approx(expected, abs=1e-12)

    def test_cross_entropy_floor(self):
        probs = np.array([[1.0, 0.0, 0.0]])
        labels = np.array([[0.0, 1.0, 0.0]])
        loss = F.cross_entropy_loss(probs, labels)
        assert loss == pytest.approx(-math.log(F.PROB_FLOOR))
        assert np.all(np.isfinite(F.cross_entropy_backward(probs, labels)))

    def test_non_one_hot_rejected(self):
        with pytest.raises(LabelError):
            F.cross_entropy_loss(np.full((1, 3), 1 / 3), np.array([[1.0, 1.0, 0.0]]))

    def test_one_hot_out_of_range(self):
        with pytest.raises(LabelError):
            F.one_hot([0, 3], 3)

    def test_one_hot(self):
        np.testing.assert_array_equal(
            F.one_hot([2, 0], 3), [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]
        )

    def test_mse(self):
        assert F.mse_loss(np.array([[1.0, 3.0]]), np.array([[0.0, 1.0]])) == 2.5
        np.testing.assert_allclose(
            F.mse_backward(np.array([[1.0, 3.0]]), np.array([[0.0, 1.0]])), [[1.0, 2.0]]
        )
