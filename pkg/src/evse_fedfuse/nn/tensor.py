"""텐서와 파라미터 컨테이너.

텐서는 numpy ``ndarray`` 그 자체를 쓴다. 이 모듈은 그 위에
유효성 검사, 이름 붙은 파라미터(``ParamTensor``), 모델 단위 파라미터
묶음(``ModelParams``)과 평탄화 뷰를 제공한다.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field

import numpy as np

from evse_fedfuse.errors import DimensionError, NonFiniteError

Tensor = np.ndarray

DTYPES: dict[str, type[np.floating]] = {
    "float64": np.float64,
    "float32": np.float32,
}


def resolve_dtype(precision: str | np.dtype | type) -> np.dtype:
    """'float64' / 'float32' 문자열 또는 dtype을 numpy dtype으로 바꾼다."""
    if isinstance(precision, str):
        if precision not in DTYPES:
            raise DimensionError(f"지원하지 않는 precision: {precision!r}")
        return np.dtype(DTYPES[precision])
    return np.dtype(precision)


def as_tensor(data, shape: tuple[int, ...] | None = None, dtype=np.float64) -> Tensor:
    """입력을 연속(row-major) 실수 배열로 변환한다.

    ``shape``이 주어지면 원소 수가 일치해야 한다.
    """
    arr = np.ascontiguousarray(np.asarray(data, dtype=dtype))
    if shape is not None:
        if int(np.prod(shape)) != arr.size:
            raise DimensionError(
                f"shape {tuple(shape)}에 원소 {arr.size}개를 담을 수 없습니다."
            )
        arr = arr.reshape(shape)
    return arr


def is_finite(t: Tensor) -> bool:
    return bool(np.all(np.isfinite(t)))


def check_finite(t: Tensor, name: str = "tensor") -> Tensor:
    """NaN/Inf가 있으면 ``NonFiniteError``를 던진다."""
    if not is_finite(t):
        bad = int(np.size(t) - np.count_nonzero(np.isfinite(t)))
        raise NonFiniteError(f"{name}: 유한하지 않은 값 {bad}개 (shape={t.shape})")
    return t


def glorot_uniform(
    shape: tuple[int, ...],
    fan_in: int,
    fan_out: int,
    rng: np.random.Generator,
    dtype=np.float64,
) -> Tensor:
    """±sqrt(6/(fan_in+fan_out)) 균등 분포 초기화."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


@dataclass
class ParamTensor:
    """이름 붙은 학습 파라미터. ``grad``는 ``value``와 shape이 같다."""

    name: str
    value: Tensor
    grad: Tensor = field(default=None)  # type: ignore[assignment]
    grad_ready: bool = False

    def __post_init__(self) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.grad.shape != self.value.shape:
            raise DimensionError(
                f"{self.name}: grad shape {self.grad.shape} != value shape "
                f"{self.value.shape}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)

    def accumulate(self, g: Tensor) -> None:
        """역전파 결과를 grad에 더하고 채워졌음을 표시한다."""
        if g.shape != self.value.shape:
            raise DimensionError(
                f"{self.name}: gradient shape {g.shape} != {self.value.shape}"
            )
        self.grad += g
        self.grad_ready = True

    def zero_grad(self) -> None:
        self.grad.fill(0.0)
        self.grad_ready = False


class ModelParams:
    """순서가 고정된 이름 붙은 파라미터 묶음.

    집계를 위해 모든 파라미터를 이어 붙인 1차원 벡터 뷰를 제공한다.
    순서는 생성 시점의 등록 순서이며 이후 바뀌지 않는다.
    """

    def __init__(self, params: Iterable[ParamTensor]) -> None:
        self._params: list[ParamTensor] = list(params)
        names = [p.name for p in self._params]
        if len(set(names)) != len(names):
            raise DimensionError(f"파라미터 이름이 중복되었습니다: {names}")
        self._index = {p.name: p for p in self._params}

    def __iter__(self) -> Iterator[ParamTensor]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def __getitem__(self, name: str) -> ParamTensor:
        return self._index[name]

    @property
    def names(self) -> list[str]:
        return [p.name for p in self._params]

    @property
    def count(self) -> int:
        """스칼라 파라미터 총 개수."""
        return sum(p.size for p in self._params)

    def to_vector(self) -> Tensor:
        if not self._params:
            return np.zeros(0)
        return np.concatenate([p.value.ravel() for p in self._params])

    def grad_vector(self) -> Tensor:
        if not self._params:
            return np.zeros(0)
        return np.concatenate([p.grad.ravel() for p in self._params])

    def load_vector(self, vec: Tensor) -> None:
        """평탄화 벡터를 파라미터에 다시 채운다 (in-place, dtype 유지)."""
        vec = np.asarray(vec)
        if vec.ndim != 1 or vec.size != self.count:
            raise DimensionError(
                f"벡터 길이 {vec.size}가 파라미터 수 {self.count}와 다릅니다."
            )
        offset = 0
        for p in self._params:
            p.value[...] = vec[offset : offset + p.size].reshape(p.shape)
            offset += p.size

    def state_dict(self) -> dict[str, Tensor]:
        return {p.name: p.value.copy() for p in self._params}

    def load_state_dict(self, state: dict[str, Tensor]) -> None:
        missing = set(self.names) - set(state)
        if missing:
            raise DimensionError(f"누락된 파라미터: {sorted(missing)}")
        for p in self._params:
            src = np.asarray(state[p.name])
            if src.shape != p.shape:
                raise DimensionError(
                    f"{p.name}: shape {src.shape} != {p.shape}"
                )
            p.value[...] = src

    def zero_grad(self) -> None:
        for p in self._params:
            p.zero_grad()

    def any_grad_ready(self) -> bool:
        return any(p.grad_ready for p in self._params)
