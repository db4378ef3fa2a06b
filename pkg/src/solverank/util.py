"""Shared small helpers: JSONL with a metadata header line, atomic writes,
stable seed derivation."""

from __future__ import annotations

import json
import os
import tempfile
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Any

from solverank._kernels import fnv1a64

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN64 = 0x9E3779B97F4A7C15


def derive_seed(seed: int, *labels: str) -> int:
    """Mix a base seed with string labels into a stable 63-bit stream seed.

    Used wherever independent deterministic RNG streams are needed (one per
    anchor, one per epoch, ...) so that parallel execution order cannot
    change results.
    """
    h = (seed * _GOLDEN64) & _MASK64
    for label in labels:
        h = (h ^ fnv1a64(label.encode("utf-8"))) & _MASK64
        h = (h * _GOLDEN64) & _MASK64
    return h >> 1


def dumps_record(obj: dict[str, Any]) -> str:
    """Deterministic single-line JSON used for every record artifact."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write-temp-then-rename so readers never observe a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path: str | Path, records: Iterable[dict[str, Any]], meta: dict[str, Any] | None = None) -> None:
    """Write records one JSON object per line, with an optional leading
    ``{"_meta": ...}`` line carrying run metadata."""
    lines = []
    if meta is not None:
        lines.append(dumps_record({"_meta": meta}))
    lines.extend(dumps_record(rec) for rec in records)
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (1-based line number, record), skipping blank and meta lines."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if isinstance(obj, dict) and set(obj) == {"_meta"}:
                continue
            yield lineno, obj


def read_jsonl_meta(path: str | Path) -> dict[str, Any] | None:
    """Return the ``_meta`` header of a JSONL artifact, if present."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if isinstance(obj, dict) and set(obj) == {"_meta"}:
                return obj["_meta"]
            return None
    return None
