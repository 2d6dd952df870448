"""손실 함수 객체. ``forward``가 값을, ``backward``가 예측에 대한 기울기를 준다."""

from __future__ import annotations

from evse_fedfuse.errors import StateError
from evse_fedfuse.nn import functional as F
from evse_fedfuse.nn.tensor import Tensor


class Loss:
    def __init__(self) -> None:
        self._cache: tuple[Tensor, Tensor] | None = None

    def forward(self, pred: Tensor, target: Tensor) -> float:
        value = self._value(pred, target)
        self._cache = (pred, target)
        return value

    def backward(self) -> Tensor:
        if self._cache is None:
            raise StateError(f"{type(self).__name__}: forward 전에 backward를 호출했습니다.")
        pred, target = self._cache
        self._cache = None
        return self._grad(pred, target)

    def _value(self, pred: Tensor, target: Tensor) -> float:
        raise NotImplementedError

    def _grad(self, pred: Tensor, target: Tensor) -> Tensor:
        raise NotImplementedError


class CrossEntropyLoss(Loss):
    """softmax 확률과 one-hot 라벨 사이의 categorical cross-entropy."""

    def _value(self, pred, target):
        return F.cross_entropy_loss(pred, target)

    def _grad(self, pred, target):
        return F.cross_entropy_backward(pred, target)


class MSELoss(Loss):
    """오토인코더 재구성 오차."""

    def _value(self, pred, target):
        return F.mse_loss(pred, target)

    def _grad(self, pred, target):
        return F.mse_backward(pred, target)
