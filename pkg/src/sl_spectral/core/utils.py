"""Utility functions for hashing, JSON and CSV output."""

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from sl_utils.config import CSV_DIGITS


def calculate_content_hash(content: bytes) -> str:
    """Calculate SHA-256 hash of content."""
    return hashlib.sha256(content).hexdigest()


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars, arrays and infinities into plain JSON values.

    Infinite floats become the strings "inf" / "-inf"; NaN becomes None.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, Path):
        return str(value)
    return value


def canonical_json(value: Any) -> str:
    """Compact, key-sorted JSON used for cache keys."""
    return json.dumps(to_jsonable(value), sort_keys=True, separators=(",", ":"))


def dump_json(value: Any) -> str:
    """Pretty JSON with the key order of the producing dict."""
    return json.dumps(to_jsonable(value), indent=2, ensure_ascii=False) + "\n"


def format_number(value: float) -> str:
    return f"{float(value):.{CSV_DIGITS}g}"


def format_csv(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    """Comma-separated table with 17 significant digits and '\\n' line ends."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buffer.getvalue()


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    return path
