"""CSV tables with ``#`` comment headers and YAML metadata sidecars."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np
import yaml


class SchemaError(ValueError):
    """A table lacks required columns or has malformed rows."""


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, columns: dict, header: dict | None = None):
    """Write equal-length columns; ``header`` items become ``# key: value`` lines."""
    names = list(columns)
    arrays = [np.asarray(columns[n]).ravel() for n in names]
    if len({a.size for a in arrays}) > 1:
        raise ValueError("columns must have equal length")
    buf = io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*arrays):
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path, required=()):
    """Read a table written by :func:`write_csv` (or any headed numeric CSV).

    Returns
    -------
    columns : dict of ndarray
    header : dict of str
    """
    header, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            header[key.strip()] = val.strip()
        elif line.strip():
            lines.append(line)
    if not lines:
        raise SchemaError(f"{path}: no table found")
    rows = list(csv.reader(lines))
    names = [n.strip() for n in rows[0]]
    missing = [c for c in required if c not in names]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], float).reshape(-1, len(names))
    except ValueError as exc:
        raise SchemaError(f"{path}: malformed row ({exc})") from None
    return {n: data[:, i] for i, n in enumerate(names)}, header


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".meta.yaml")


def write_sidecar(path, meta: dict):
    sidecar_path(path).write_text(yaml.safe_dump(meta, sort_keys=True))


def read_sidecar(path):
    p = sidecar_path(path)
    return yaml.safe_load(p.read_text()) if p.exists() else None
