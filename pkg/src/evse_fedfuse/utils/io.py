"""결과 파일 쓰기. 같은 입력이면 바이트 단위로 같은 파일을 만든다."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np
import pandas as pd


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"JSON으로 직렬화할 수 없는 타입: {type(obj).__name__}")


def write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(data, indent=2, ensure_ascii=False, default=_default) + "\n",
        encoding="utf-8",
    )


def append_jsonl(path: Path, record: Mapping) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as f:
        f.write(json.dumps(record, ensure_ascii=False, default=_default) + "\n")


def write_jsonl(path: Path, records: Iterable[Mapping]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False, default=_default) + "\n")


def format_cell(value) -> str:
    """실수는 소수점 둘째 자리, 나머지는 문자열 그대로."""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.2f}"
    return str(value)


def _table(rows: Sequence[Mapping], columns: Sequence[str]) -> pd.DataFrame:
    """열 순서를 고정하고 실수는 format_cell로 맞춘 표."""
    cells = [{col: format_cell(row.get(col, "")) for col in columns} for row in rows]
    return pd.DataFrame(cells, columns=list(columns))


def rows_to_csv(rows: Sequence[Mapping], columns: Sequence[str]) -> str:
    return _table(rows, columns).to_csv(index=False, lineterminator="\n")


def write_csv(path: Path, rows: Sequence[Mapping], columns: Sequence[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    _table(rows, columns).to_csv(
        path, index=False, lineterminator="\n", encoding="utf-8"
    )
