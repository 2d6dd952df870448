"""실행 출력 디렉토리 레이아웃."""

from __future__ import annotations

from pathlib import Path

from evse_fedfuse.models.labels import Modality


class RunPaths:
    """한 실행의 출력 파일 경로를 해석한다.

    out/
      config.json, metrics.json, metrics.csv, rounds.jsonl
      checkpoints/ae_<modality>.bin, checkpoints/cnn.bin
      checkpoints/client_<id>/ae_<modality>.bin   (연합 실행)
    """

    def __init__(self, out_dir: Path) -> None:
        self._out_dir = Path(out_dir)

    @property
    def out_dir(self) -> Path:
        return self._out_dir

    @property
    def config_file(self) -> Path:
        return self._out_dir / "config.json"

    @property
    def metrics_json(self) -> Path:
        return self._out_dir / "metrics.json"

    @property
    def metrics_csv(self) -> Path:
        return self._out_dir / "metrics.csv"

    @property
    def rounds_log(self) -> Path:
        return self._out_dir / "rounds.jsonl"

    @property
    def checkpoints_dir(self) -> Path:
        return self._out_dir / "checkpoints"

    def ensure(self) -> RunPaths:
        self.checkpoints_dir.mkdir(parents=True, exist_ok=True)
        return self

    def table_csv(self, name: str) -> Path:
        return self._out_dir / f"{name}.csv"

    def dataset_csv(self, modality: Modality) -> Path:
        return self._out_dir / f"{modality.value}.csv"

    def ae_checkpoint(self, modality: Modality, client_id: int | None = None) -> Path:
        base = self.checkpoints_dir
        if client_id is not None:
            base = base / f"client_{client_id}"
        return base / f"ae_{modality.value}.bin"

    def cnn_checkpoint(self) -> Path:
        return self.checkpoints_dir / "cnn.bin"

    def client_ids(self) -> list[int]:
        """저장된 충전소별 체크포인트 디렉토리의 id (오름차순)."""
        if not self.checkpoints_dir.is_dir():
            return []
        ids = []
        for d in self.checkpoints_dir.glob("client_*"):
            suffix = d.name.removeprefix("client_")
            if d.is_dir() and suffix.isdigit():
                ids.append(int(suffix))
        return sorted(ids)

    def has_checkpoints(self) -> bool:
        return self.cnn_checkpoint().is_file()
