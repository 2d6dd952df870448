"""레이어와 Sequential 컨테이너.

각 레이어는 ``forward``에서 역전파에 필요한 값을 저장하고
``backward``에서 입력에 대한 기울기를 반환하며 파라미터 grad를 누적한다.
``infer``는 저장 없이 계산만 하므로 여러 스레드에서 동시에 호출해도 된다.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np

from evse_fedfuse.errors import DimensionError, StateError
from evse_fedfuse.nn import functional as F
from evse_fedfuse.nn.tensor import ParamTensor, Tensor, glorot_uniform

if TYPE_CHECKING:
    from evse_fedfuse.nn.losses import Loss


class Module:
    """레이어 기반 클래스."""

    def __init__(self) -> None:
        self._cache = None

    def infer(self, x: Tensor) -> Tensor:
        out, _ = self._compute(x)
        return out

    def forward(self, x: Tensor) -> Tensor:
        out, cache = self._compute(x)
        self._cache = cache
        return out

    def backward(self, grad_out: Tensor) -> Tensor:
        if self._cache is None:
            name = type(self).__name__
            raise StateError(f"{name}: forward 전에 backward를 호출했습니다.")
        grad_in = self._backward(grad_out, self._cache)
        self._cache = None
        return grad_in

    def parameters(self) -> list[ParamTensor]:
        return []

    def _compute(self, x: Tensor):
        raise NotImplementedError

    def _backward(self, grad_out: Tensor, cache) -> Tensor:
        raise NotImplementedError


class Dense(Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        name: str = "dense",
        dtype=np.float64,
    ) -> None:
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        shape = (in_features, out_features)
        self.weight = ParamTensor(
            f"{name}.weight",
            glorot_uniform(shape, in_features, out_features, rng, dtype),
        )
        self.bias = ParamTensor(f"{name}.bias", np.zeros(out_features, dtype=dtype))

    def parameters(self) -> list[ParamTensor]:
        return [self.weight, self.bias]

    def _compute(self, x):
        return F.dense_forward(x, self.weight.value, self.bias.value), x

    def _backward(self, grad_out, x):
        dx, dW, db = F.dense_backward(x, self.weight.value, grad_out)
        self.weight.accumulate(dW)
        self.bias.accumulate(db)
        return dx


class Conv1d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        name: str = "conv",
        dtype=np.float64,
    ) -> None:
        super().__init__()
        self.stride = stride
        self.kernel_size = kernel_size
        shape = (out_channels, in_channels, kernel_size)
        self.filters = ParamTensor(
            f"{name}.filters",
            glorot_uniform(
                shape, in_channels * kernel_size, out_channels * kernel_size, rng, dtype
            ),
        )
        self.bias = ParamTensor(f"{name}.bias", np.zeros(out_channels, dtype=dtype))

    def parameters(self) -> list[ParamTensor]:
        return [self.filters, self.bias]

    def _compute(self, x):
        out = F.conv1d_forward(x, self.filters.value, self.bias.value, self.stride)
        return out, x

    def _backward(self, grad_out, x):
        dx, d_filters, d_bias = F.conv1d_backward(
            x, self.filters.value, grad_out, self.stride
        )
        self.filters.accumulate(d_filters)
        self.bias.accumulate(d_bias)
        return dx


class MaxPool1d(Module):
    def __init__(self, window: int) -> None:
        super().__init__()
        self.window = window

    def _compute(self, x):
        out, argmax = F.maxpool1d_forward(x, self.window)
        return out, (argmax, x.shape[2])

    def _backward(self, grad_out, cache):
        argmax, length = cache
        return F.maxpool1d_backward(grad_out, argmax, length, self.window)


class ReLU(Module):
    def _compute(self, x):
        return F.relu(x), x

    def _backward(self, grad_out, x):
        return F.relu_backward(x, grad_out)


class Softmax(Module):
    def _compute(self, x):
        probs = F.softmax(x)
        return probs, probs

    def _backward(self, grad_out, probs):
        return F.softmax_backward(probs, grad_out)


class Reshape(Module):
    """배치 차원을 유지한 채 나머지 shape을 바꾼다."""

    def __init__(self, *shape: int) -> None:
        super().__init__()
        self.shape = shape

    def _compute(self, x):
        if int(np.prod(x.shape[1:])) != int(np.prod(self.shape)):
            raise DimensionError(f"{x.shape[1:]}을 {self.shape}로 바꿀 수 없습니다.")
        return x.reshape((x.shape[0], *self.shape)), x.shape

    def _backward(self, grad_out, in_shape):
        return grad_out.reshape(in_shape)


class Flatten(Module):
    def _compute(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def _backward(self, grad_out, in_shape):
        return grad_out.reshape(in_shape)


class Sequential(Module):
    """레이어를 순서대로 적용하는 컨테이너."""

    def __init__(self, layers: Sequence[Module]) -> None:
        super().__init__()
        self.layers = list(layers)
        self._ran_forward = False

    def parameters(self) -> list[ParamTensor]:
        return [p for layer in self.layers for p in layer.parameters()]

    def infer(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer.infer(x)
        return x

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer.forward(x)
        self._ran_forward = True
        return x

    def backward(self, grad_out: Tensor) -> Tensor:
        if not self._ran_forward:
            raise StateError("Sequential: forward 전에 backward를 호출했습니다.")
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        self._ran_forward = False
        return grad_out


def backward(model: Module, loss: Loss) -> Tensor:
    """손실의 기울기를 모델 끝에서부터 역전파한다.

    호출 후 모델의 모든 ``ParamTensor.grad``에 ∂loss/∂param이 누적된다.
    """
    return model.backward(loss.backward())
