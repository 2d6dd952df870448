"""모델 체크포인트 컨테이너.

레이아웃 (little-endian):
    b"EVFF" | uint32 헤더 길이 | UTF-8 JSON 헤더 | float32 텐서들 (헤더 순서)

헤더에는 format_version, kind("autoencoder" | "cnn1d"), 모델 설정과
텐서 목록 [{name, shape}]이 들어간다. 오토인코더의 정규화 통계도 헤더에 둔다.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from evse_fedfuse.core.classifier import CnnModel
from evse_fedfuse.core.dataset import NormStats
from evse_fedfuse.core.encoder import AutoencoderModel
from evse_fedfuse.errors import CheckpointError, DimensionError
from evse_fedfuse.models.config import AutoencoderConfig, CnnConfig
from evse_fedfuse.models.labels import Modality
from evse_fedfuse.nn.tensor import ModelParams

MAGIC = b"EVFF"
FORMAT_VERSION = 1
_DISK_DTYPE = np.dtype("<f4")


def write_container(path: Path, header: dict, params: ModelParams) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        **header,
        "tensors": [{"name": p.name, "shape": list(p.shape)} for p in params],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for p in params:
            f.write(np.ascontiguousarray(p.value, dtype=_DISK_DTYPE).tobytes())


def read_container(path: Path) -> tuple[dict, dict[str, np.ndarray]]:
    """(헤더, 이름 → float32 텐서)를 읽는다."""
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"체크포인트를 읽을 수 없습니다: {path} ({e})") from e

    if raw[:4] != MAGIC or len(raw) < 8:
        raise CheckpointError(f"체크포인트 형식이 아닙니다: {path}")
    (header_len,) = struct.unpack("<I", raw[4:8])
    try:
        header = json.loads(raw[8 : 8 + header_len].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as e:
        raise CheckpointError(f"체크포인트 헤더 손상: {path} ({e})") from e

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"format_version {version}은 지원하지 않습니다 (필요: {FORMAT_VERSION}): {path}"
        )

    tensors: dict[str, np.ndarray] = {}
    offset = 8 + header_len
    for entry in header.get("tensors", []):
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * _DISK_DTYPE.itemsize
        if offset + nbytes > len(raw):
            raise CheckpointError(f"텐서 {entry['name']} 데이터가 잘렸습니다: {path}")
        tensors[entry["name"]] = np.frombuffer(
            raw, dtype=_DISK_DTYPE, count=nbytes // _DISK_DTYPE.itemsize, offset=offset
        ).reshape(shape)
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"체크포인트 끝에 남는 데이터가 있습니다: {path}")
    return header, tensors


@dataclass
class Checkpoint:
    kind: str
    header: dict
    model: AutoencoderModel | CnnModel
    norm_stats: NormStats | None = None


def save_checkpoint(
    path: Path,
    model: AutoencoderModel | CnnModel,
    norm_stats: NormStats | None = None,
) -> None:
    if isinstance(model, AutoencoderModel):
        header = {
            "kind": "autoencoder",
            "modality": model.modality.value if model.modality else None,
            "latent_dim": model.latent_dim,
            "d": model.d,
            "h": model.hidden,
            "config": model.config.model_dump(),
            "norm_stats": norm_stats.to_dict() if norm_stats else None,
        }
    elif isinstance(model, CnnModel):
        header = {"kind": "cnn1d", "arch": "cnn1d", "config": model.config.model_dump()}
    else:
        raise CheckpointError(f"저장할 수 없는 모델 타입: {type(model).__name__}")
    write_container(path, header, model.params)


def load_checkpoint(path: Path, dtype=np.float64) -> Checkpoint:
    header, tensors = read_container(path)
    kind = header.get("kind")
    try:
        if kind == "autoencoder":
            modality = header.get("modality")
            model: AutoencoderModel | CnnModel = AutoencoderModel(
                header["d"],
                AutoencoderConfig.model_validate(header["config"]),
                Modality(modality) if modality else None,
                dtype=dtype,
            )
        elif kind == "cnn1d":
            model = CnnModel(CnnConfig.model_validate(header["config"]), dtype=dtype)
        else:
            raise CheckpointError(f"알 수 없는 체크포인트 종류 {kind!r}: {path}")
        model.params.load_state_dict(tensors)
    except (KeyError, ValueError, DimensionError) as e:
        raise CheckpointError(f"체크포인트와 모델 구조가 맞지 않습니다: {path} ({e})") from e

    stats = header.get("norm_stats")
    return Checkpoint(
        kind=kind,
        header=header,
        model=model,
        norm_stats=NormStats.from_dict(stats) if stats else None,
    )


def load_autoencoder(
    path: Path, dtype=np.float64
) -> tuple[AutoencoderModel, NormStats | None]:
    ckpt = load_checkpoint(path, dtype)
    if not isinstance(ckpt.model, AutoencoderModel):
        raise CheckpointError(f"오토인코더 체크포인트가 아닙니다: {path}")
    return ckpt.model, ckpt.norm_stats


def load_cnn(path: Path, dtype=np.float64) -> CnnModel:
    ckpt = load_checkpoint(path, dtype)
    if not isinstance(ckpt.model, CnnModel):
        raise CheckpointError(f"CNN 체크포인트가 아닙니다: {path}")
    return ckpt.model
