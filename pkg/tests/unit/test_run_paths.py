"""출력 디렉토리 레이아웃 테스트."""

from __future__ import annotations

from pathlib import Path

from evse_fedfuse.core.run_paths import RunPaths
from evse_fedfuse.models.labels import Modality


class TestRunPaths:
    def test_layout(self, tmp_path: Path):
        paths = RunPaths(tmp_path)
        assert paths.config_file == tmp_path / "config.json"
        assert paths.rounds_log == tmp_path / "rounds.jsonl"
        assert paths.cnn_checkpoint() == tmp_path / "checkpoints" / "cnn.bin"
        assert paths.ae_checkpoint(Modality.KERNEL).name == "ae_kernel.bin"
        assert paths.ae_checkpoint(Modality.NETWORK, 3).parent.name == "client_3"
        assert paths.table_csv("client_sweep") == tmp_path / "client_sweep.csv"

    def test_client_ids_sorted(self, tmp_path: Path):
        paths = RunPaths(tmp_path).ensure()
        for name in ("client_10", "client_2", "client_x", "notes"):
            (paths.checkpoints_dir / name).mkdir()
        assert paths.client_ids() == [2, 10]

    def test_no_checkpoints(self, tmp_path: Path):
        paths = RunPaths(tmp_path / "missing")
        assert paths.client_ids() == []
        assert not paths.has_checkpoints()
