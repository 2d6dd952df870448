"""시드 파생 유틸리티.

하위 작업의 시드는 (마스터 시드, 태그...)의 해시로 만든다.
같은 입력이면 스레드 실행 순서와 무관하게 같은 시드가 나온다.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _as_int(part: int | str) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def derive_seed(seed: int, *parts: int | str) -> int:
    """(seed, parts...)로부터 32비트 시드를 파생한다."""
    ss = np.random.SeedSequence([_as_int(seed), *(_as_int(p) for p in parts)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def make_rng(seed: int, *parts: int | str) -> np.random.Generator:
    if not parts:
        return np.random.default_rng(seed)
    return np.random.default_rng(derive_seed(seed, *parts))
