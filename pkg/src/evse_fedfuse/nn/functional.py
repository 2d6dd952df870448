"""레이어 연산의 순수 함수 구현 (forward / backward).

모든 함수는 입력을 변경하지 않고 새 배열을 반환한다.
shape 규약:
    dense   x[batch, in]          W[in, out]          b[out]
    conv1d  x[batch, ch, length]  filters[k, ch, M]   bias[k]
    pool    x[batch, ch, length]  -> [batch, ch, length // window]
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from evse_fedfuse.errors import (
    DimensionError,
    EmptyOutputError,
    KernelSizeError,
    LabelError,
)
from evse_fedfuse.nn.tensor import Tensor

PROB_FLOOR = 1e-12


def _require_ndim(t: Tensor, ndim: int, name: str) -> None:
    if t.ndim != ndim:
        raise DimensionError(f"{name}: {ndim}차원이어야 합니다 (shape={t.shape})")


# --- dense -----------------------------------------------------------------


def dense_forward(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """out[i, j] = Σ_k x[i, k]·W[k, j] + b[j]"""
    _require_ndim(x, 2, "x")
    _require_ndim(W, 2, "W")
    if x.shape[1] != W.shape[0] or b.shape != (W.shape[1],):
        raise DimensionError(
            f"dense shape 불일치: x{x.shape} · W{W.shape} + b{b.shape}"
        )
    return x @ W + b


def dense_backward(
    x: Tensor, W: Tensor, grad_out: Tensor
) -> tuple[Tensor, Tensor, Tensor]:
    """(dx, dW, db)를 반환한다."""
    return grad_out @ W.T, x.T @ grad_out, grad_out.sum(axis=0)


# --- conv1d ----------------------------------------------------------------


def conv1d_output_length(length: int, kernel: int, stride: int = 1) -> int:
    if kernel > length:
        raise KernelSizeError(f"커널 크기 {kernel} > 입력 길이 {length}")
    return (length - kernel) // stride + 1


def _windows(x: Tensor, kernel: int, stride: int) -> Tensor:
    # [batch, ch, out_len, M] 읽기 전용 뷰
    return sliding_window_view(x, kernel, axis=2)[:, :, ::stride, :]


def conv1d_forward(
    x: Tensor, filters: Tensor, bias: Tensor, stride: int = 1
) -> Tensor:
    """패딩 없는(valid) 1D 컨볼루션.

    out[b, k, p] = Σ_c Σ_m filters[k, c, m]·x[b, c, p·stride + m] + bias[k]
    """
    _require_ndim(x, 3, "x")
    _require_ndim(filters, 3, "filters")
    if stride < 1:
        raise DimensionError(f"stride는 1 이상이어야 합니다: {stride}")
    if filters.shape[1] != x.shape[1] or bias.shape != (filters.shape[0],):
        raise DimensionError(
            f"conv1d shape 불일치: x{x.shape}, filters{filters.shape}, "
            f"bias{bias.shape}"
        )
    conv1d_output_length(x.shape[2], filters.shape[2], stride)
    win = _windows(x, filters.shape[2], stride)
    return np.einsum("bclm,kcm->bkl", win, filters) + bias[None, :, None]


def conv1d_backward(
    x: Tensor, filters: Tensor, grad_out: Tensor, stride: int = 1
) -> tuple[Tensor, Tensor, Tensor]:
    """(dx, dfilters, dbias)를 반환한다."""
    kernel = filters.shape[2]
    out_len = grad_out.shape[2]
    win = _windows(x, kernel, stride)
    d_filters = np.einsum("bkl,bclm->kcm", grad_out, win)
    d_bias = grad_out.sum(axis=(0, 2))
    dx = np.zeros_like(x)
    span = stride * (out_len - 1) + 1
    for m in range(kernel):
        dx[:, :, m : m + span : stride] += np.einsum(
            "bkl,kc->bcl", grad_out, filters[:, :, m]
        )
    return dx, d_filters, d_bias


# --- max-pool --------------------------------------------------------------


def maxpool1d_forward(x: Tensor, window: int) -> tuple[Tensor, Tensor]:
    """겹치지 않는 윈도우 최댓값. 끝에 남는 위치는 버린다.

    동률이면 가장 앞(낮은 인덱스)의 최댓값이 선택된다.
    반환: (출력, 윈도우 내 argmax 인덱스)
    """
    _require_ndim(x, 3, "x")
    if window < 1:
        raise DimensionError(f"window는 1 이상이어야 합니다: {window}")
    batch, ch, length = x.shape
    out_len = length // window
    if out_len == 0:
        raise EmptyOutputError(f"풀링 윈도우 {window} > 입력 길이 {length}")
    blocks = x[:, :, : out_len * window].reshape(batch, ch, out_len, window)
    argmax = blocks.argmax(axis=3)
    out = np.take_along_axis(blocks, argmax[..., None], axis=3)[..., 0]
    return out, argmax


def maxpool1d_backward(
    grad_out: Tensor, argmax: Tensor, length: int, window: int
) -> Tensor:
    """기울기를 저장된 argmax 위치로만 보낸다."""
    batch, ch, out_len = grad_out.shape
    blocks = np.zeros((batch, ch, out_len, window), dtype=grad_out.dtype)
    np.put_along_axis(blocks, argmax[..., None], grad_out[..., None], axis=3)
    dx = np.zeros((batch, ch, length), dtype=grad_out.dtype)
    dx[:, :, : out_len * window] = blocks.reshape(batch, ch, out_len * window)
    return dx


# --- activations -----------------------------------------------------------


def relu(x: Tensor) -> Tensor:
    return np.maximum(x, 0)


def relu_backward(x: Tensor, grad_out: Tensor) -> Tensor:
    # x == 0 에서의 subgradient는 0
    return grad_out * (x > 0)


def softmax(logits: Tensor) -> Tensor:
    """행 단위 softmax (최댓값을 빼서 안정화)."""
    _require_ndim(logits, 2, "logits")
    if logits.shape[1] < 2:
        raise DimensionError(f"클래스가 2개 이상이어야 합니다 (shape={logits.shape})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_backward(probs: Tensor, grad_out: Tensor) -> Tensor:
    return probs * (grad_out - (grad_out * probs).sum(axis=1, keepdims=True))


# --- losses ----------------------------------------------------------------


def check_one_hot(labels: Tensor) -> None:
    _require_ndim(labels, 2, "labels")
    is_binary = np.all((labels == 0) | (labels == 1))
    if not is_binary or not np.all(labels.sum(axis=1) == 1):
        bad = np.flatnonzero(
            ~(np.all((labels == 0) | (labels == 1), axis=1) & (labels.sum(axis=1) == 1))
        )
        raise LabelError(f"one-hot이 아닌 라벨 행: {bad[:10].tolist()}")


def one_hot(labels, n_classes: int, dtype=np.float64) -> Tensor:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise LabelError(
            f"라벨이 범위 [0, {n_classes})를 벗어났습니다: "
            f"{sorted(set(labels[(labels < 0) | (labels >= n_classes)].tolist()))}"
        )
    out = np.zeros((labels.size, n_classes), dtype=dtype)
    out[np.arange(labels.size), labels] = 1
    return out


def cross_entropy_loss(probs: Tensor, labels: Tensor) -> float:
    """배치 평균 −log p(정답). 확률은 log 전에 1e-12로 하한을 둔다."""
    if probs.shape != labels.shape:
        raise DimensionError(f"probs{probs.shape}와 labels{labels.shape}가 다릅니다.")
    check_one_hot(labels)
    true_p = (probs * labels).sum(axis=1)
    return float(-np.log(np.maximum(true_p, PROB_FLOOR)).mean())


def cross_entropy_backward(probs: Tensor, labels: Tensor) -> Tensor:
    batch = probs.shape[0]
    safe = np.maximum(probs, PROB_FLOOR)
    # 하한에 걸린 항은 상수이므로 기울기 0
    return np.where(probs > PROB_FLOOR, -labels / safe, 0.0) / batch


def mse_loss(x_hat: Tensor, x: Tensor) -> float:
    if x_hat.shape != x.shape:
        raise DimensionError(f"x̂{x_hat.shape}와 x{x.shape}의 shape이 다릅니다.")
    return float(np.mean((x_hat - x) ** 2))


def mse_backward(x_hat: Tensor, x: Tensor) -> Tensor:
    return 2.0 * (x_hat - x) / x.size
