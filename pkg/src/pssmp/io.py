"""Artifact serialization: RFC-style CSV with mandatory header, stable JSON."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def dumps_stable(obj) -> str:
    """UTF-8 JSON with sorted keys (byte-stable across runs)."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def samples_csv(values) -> str:
    lines = ["sample"]
    for v in np.asarray(values).ravel():
        lines.append(repr(float(v)))
    return "\n".join(lines) + "\n"


def table_csv(header: list[str], columns: list) -> str:
    cols = [np.asarray(c) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def summary_record(values, extra: dict | None = None) -> dict:
    v = np.asarray(values, dtype=float)
    rec = {
        "n": int(v.size),
        "mean": float(np.mean(v)),
        "std": float(np.std(v, ddof=1)) if v.size > 1 else 0.0,
        "quantiles": {
            str(q): float(np.quantile(v, q))
            for q in (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)
        },
    }
    if extra:
        rec.update(extra)
    return rec
