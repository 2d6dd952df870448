"""옵티마이저: Adam (기본) 과 plain SGD (식 검증용)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from evse_fedfuse.errors import StateError
from evse_fedfuse.nn.tensor import ModelParams, Tensor


@dataclass
class AdamState:
    """파라미터별 1차/2차 모멘트와 스텝 카운터."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict[str, Tensor] = field(default_factory=dict)
    v: dict[str, Tensor] = field(default_factory=dict)


def adam_step(params: ModelParams, state: AdamState) -> AdamState:
    """bias 보정이 들어간 Adam 한 스텝. 적용 후 grad는 0으로 초기화된다.

    m̂ = m / (1 − β1^t),  v̂ = v / (1 − β2^t),  θ ← θ − lr · m̂ / (√v̂ + ε)
    """
    if not params.any_grad_ready():
        raise StateError("grad가 채워지지 않은 상태에서 Adam step을 호출했습니다.")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for p in params:
        m = state.m.get(p.name)
        v = state.v.get(p.name)
        if m is None or v is None:
            m = np.zeros_like(p.value)
            v = np.zeros_like(p.value)
        m = state.beta1 * m + (1.0 - state.beta1) * p.grad
        v = state.beta2 * v + (1.0 - state.beta2) * p.grad**2
        state.m[p.name] = m
        state.v[p.name] = v
        m_hat = m / bc1
        v_hat = v / bc2
        p.value -= (state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)).astype(
            p.value.dtype, copy=False
        )
    params.zero_grad()
    return state


def sgd_step(params: ModelParams, lr: float) -> None:
    """θ ← θ − lr·∇L. grad는 0으로 초기화된다."""
    if not params.any_grad_ready():
        raise StateError("grad가 채워지지 않은 상태에서 SGD step을 호출했습니다.")
    for p in params:
        p.value -= (lr * p.grad).astype(p.value.dtype, copy=False)
    params.zero_grad()


class Adam:
    def __init__(
        self,
        params: ModelParams,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> None:
        self.params = params
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)

    def step(self) -> None:
        adam_step(self.params, self.state)


class SGD:
    """plain gradient step. 가중 평균 집계가 전역 경사 스텝과 같음을 확인할 때 쓴다."""

    def __init__(self, params: ModelParams, lr: float) -> None:
        self.params = params
        self.lr = lr

    def step(self) -> None:
        sgd_step(self.params, self.lr)


def make_optimizer(name: str, params: ModelParams, lr: float) -> Adam | SGD:
    if name == "adam":
        return Adam(params, lr=lr)
    if name == "sgd":
        return SGD(params, lr=lr)
    raise StateError(f"알 수 없는 optimizer: {name!r}")
