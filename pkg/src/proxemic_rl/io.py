"""CSV exporters, readers and the run manifest.

Numbers are written with 17 significant digits so every float64 round-trips
exactly.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .env import GridConfig, region_of

SCHEMA_VERSION = 1
FLOAT_FMT = "{:.17g}"

TRACE_HEADER = ["t", "mean", "min", "max"]
Q_ACTION_COLS = ["q_up", "q_down", "q_left", "q_right", "q_ping"]
FINAL_Q_HEADER = ["row", "col", *Q_ACTION_COLS, "q_move_max"]
QTABLE_HEADER = ["row", "col", *Q_ACTION_COLS]
EXACT_Q_HEADER = ["row", "col", "pings", *Q_ACTION_COLS]
REGIONS_HEADER = ["row", "col", "region"]


def fmt(x: float) -> str:
    return FLOAT_FMT.format(float(x))


def _write_rows(path: Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_trace_csv(path, mean, lo, hi) -> Path:
    rows = ((t, fmt(m), fmt(a), fmt(b)) for t, (m, a, b) in enumerate(zip(mean, lo, hi)))
    return _write_rows(path, TRACE_HEADER, rows)


def write_final_q_csv(path, mean_q: np.ndarray) -> Path:
    rows_, cols_, _ = mean_q.shape
    move_max = mean_q[..., :4].max(axis=-1)
    rows = (
        (r, c, *(fmt(v) for v in mean_q[r, c]), fmt(move_max[r, c]))
        for r in range(rows_) for c in range(cols_)
    )
    return _write_rows(path, FINAL_Q_HEADER, rows)


def write_qtable_csv(path, q) -> Path:
    arr = q.as_array()
    rows = ((r, c, *(fmt(v) for v in arr[r, c]))
            for r in range(arr.shape[0]) for c in range(arr.shape[1]))
    return _write_rows(path, QTABLE_HEADER, rows)


def write_exact_q_csv(path, exact) -> Path:
    arr = exact.as_array()
    rows = ((r, c, p, *(fmt(v) for v in arr[r, c, p]))
            for r in range(arr.shape[0]) for c in range(arr.shape[1])
            for p in range(arr.shape[2]))
    return _write_rows(path, EXACT_Q_HEADER, rows)


def write_regions_csv(path, cfg: GridConfig) -> Path:
    rows = ((p.row, p.col, region_of(p, cfg).name.lower()) for p in cfg.cells())
    return _write_rows(path, REGIONS_HEADER, rows)


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


def read_trace_csv(path) -> np.ndarray:
    """Return an array with columns t, mean, min, max."""
    header, rows = read_csv(path)
    if header != TRACE_HEADER:
        raise ValueError(f"unexpected trace header {header}")
    return np.array(rows, dtype=float).reshape(-1, 4)


def read_qtable_csv(path, rows: int, cols: int, n_value_cols: int = 5) -> np.ndarray:
    header, data = read_csv(path)
    out = np.zeros((rows, cols, n_value_cols))
    for rec in data:
        r, c = int(rec[0]), int(rec[1])
        out[r, c] = [float(x) for x in rec[2:2 + n_value_cols]]
    return out


def region_grid(cfg: GridConfig) -> np.ndarray:
    return np.array([[int(region_of((r, c), cfg)) for c in range(cfg.cols)]
                     for r in range(cfg.rows)])


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, config: dict, files, command: str, version: str) -> Path:
    """Write ``manifest.json`` atomically (temp file + rename)."""
    out_dir = Path(out_dir)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": version,
        "command": command,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config,
        "outputs": [
            {"file": Path(f).name, "sha256": sha256(f)} for f in files
        ],
    }
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, out_dir / "manifest.json")
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return out_dir / "manifest.json"


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)

