"""CSV and JSON readers/writers for spectra, tables and run summaries.

Spectrum CSV layout::

    # pump_record {"n_p_minus": ..., "n_p_plus": ..., ...}
    freq_hz,psd,n_avg
    ...

Floats are written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .fitting import SpectrumData

FLOAT_FMT = ".17g"
META_PREFIX = "# "


class DataError(ValueError):
    """Malformed or truncated input data."""


_BOOLS = {"true": 1.0, "false": 0.0}


def _parse(cell: str) -> float:
    key = cell.strip().lower()
    return _BOOLS[key] if key in _BOOLS else float(cell)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), FLOAT_FMT)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no NaN/inf; store them as strings
        return x if math.isfinite(x) else str(x)
    return obj


class _Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        return super().iterencode(_jsonable(o), _one_shot)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # json writes floats with repr(), which round-trips exactly
    path.write_text(json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def write_table(path, columns: dict, meta: dict | None = None) -> Path:
    """Write equal-length columns as CSV, with optional ``# key {json}`` lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns must have equal length")
    with path.open("w", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"{META_PREFIX}{key} {json.dumps(_jsonable(value))}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(n):
            w.writerow([_fmt(c[i]) for c in cols])
    return path


def read_table(path) -> tuple[dict, dict]:
    """Return ``(columns, meta)``; cells are floats, with true/false read as 1/0."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    meta = {}
    body = []
    for ln in lines:
        if ln.startswith("#"):
            key, _, value = ln.lstrip("#").strip().partition(" ")
            try:
                meta[key] = json.loads(value) if value else None
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: bad metadata line {ln!r}") from exc
        elif ln.strip():
            body.append(ln)
    if not body:
        raise DataError(f"{path}: no header row")
    rows = list(csv.reader(body))
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names")
    data = rows[1:]
    if not data:
        raise DataError(f"{path}: no data rows")
    values = np.empty((len(data), len(header)))
    for i, row in enumerate(data, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} fields, expected {len(header)}")
        try:
            values[i - 2] = [_parse(x) for x in row]
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: {exc}") from exc
    return {h: values[:, j] for j, h in enumerate(header)}, meta


SPECTRUM_COLUMNS = ("freq_hz", "psd", "n_avg")


def write_spectrum(path, data: SpectrumData) -> Path:
    return write_table(
        path,
        {"freq_hz": data.freq, "psd": data.psd, "n_avg": data.n_avg},
        meta={"pump_record": data.pump_record},
    )


def read_spectrum(path) -> SpectrumData:
    cols, meta = read_table(path)
    missing = [c for c in SPECTRUM_COLUMNS[:2] if c not in cols]
    if missing:
        raise DataError(f"{path}: missing column(s) {missing}")
    n_avg = cols.get("n_avg", 1.0)
    try:
        return SpectrumData(cols["freq_hz"], cols["psd"], n_avg, dict(meta.get("pump_record") or {}))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
