"""Pattern/curve CSV and result JSON files, with run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ValidationError
from .geometry import PointPattern, RectWindow


def fmt(v) -> str:
    """Shortest repr that round-trips a float exactly."""
    return repr(float(v))


def read_pattern(path, window: RectWindow | None = None) -> PointPattern:
    """Read ``x,y,mark`` rows. String marks map to types in first-appearance order."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.lstrip().startswith("#"))]
    if not rows or [h.strip() for h in rows[0]] != ["x", "y", "mark"]:
        raise ValidationError(f"{path}: expected header 'x,y,mark'")
    xs, ys, raw = [], [], []
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ValidationError(f"{path}:{n}: expected 3 columns")
        try:
            xs.append(float(row[0]))
            ys.append(float(row[1]))
        except ValueError:
            raise ValidationError(f"{path}:{n}: non-numeric coordinate") from None
        raw.append(row[2].strip())
    if raw and all(r.lstrip("-").isdigit() for r in raw):
        marks = np.array([int(r) for r in raw], dtype=np.int64)
        if marks.min() < 1:
            raise ValidationError(f"{path}: integer marks must be 1-based")
        m = int(marks.max())
        labels = tuple(str(k) for k in range(1, m + 1))
    else:
        labels = tuple(dict.fromkeys(raw))
        index = {lab: k for k, lab in enumerate(labels, start=1)}
        marks = np.array([index[r] for r in raw], dtype=np.int64)
        m = len(labels)
    x = np.array(xs)
    y = np.array(ys)
    if window is None:
        if x.size < 1:
            raise ValidationError(f"{path}: cannot infer a window from an empty pattern")
        window = RectWindow(x.min(), x.max(), y.min(), y.max())
    return PointPattern(x, y, marks, window, max(m, 1), labels)


def write_pattern(path, pattern: PointPattern):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("x,y,mark\n")
        for x, y, k in zip(pattern.x, pattern.y, pattern.marks):
            fh.write(f"{fmt(x)},{fmt(y)},{int(k)}\n")


def write_curves(path, curves, header: dict | None = None, model: bool = False):
    """``h,i,j,khat`` rows, grid-major, preceded by ``# key=value`` comments."""
    path = Path(path)
    meta = {"correction": getattr(curves, "correction", "model"),
            "R": curves.grid.R, "n0": curves.grid.n0, "scaled": bool(curves.scaled)}
    lam = getattr(curves, "lambdas", None)
    if lam is not None:
        meta["lambda_hat"] = ";".join(fmt(v) for v in lam)
    if model:
        meta["model"] = "true"
    meta.update(header or {})
    values = curves.values if hasattr(curves, "values") else curves.K
    m = values.shape[0]
    with path.open("w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}={v}\n")
        fh.write("h,i,j,khat\n")
        for k, h in enumerate(curves.grid.nodes):
            for i in range(m):
                for j in range(m):
                    fh.write(f"{fmt(h)},{i + 1},{j + 1},{fmt(values[i, j, k])}\n")


def read_curves(path):
    """Inverse of ``write_curves``: returns (meta dict, nodes, values (m, m, n))."""
    meta = {}
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            elif not line.startswith("h,"):
                rows.append(line.strip().split(","))
    h = np.array([float(r[0]) for r in rows])
    i = np.array([int(r[1]) for r in rows])
    j = np.array([int(r[2]) for r in rows])
    v = np.array([float(r[3]) for r in rows])
    m = int(i.max())
    nodes = h[:: m * m]
    values = np.empty((m, m, nodes.size))
    values[i - 1, j - 1, np.repeat(np.arange(nodes.size), m * m)] = v
    return meta, nodes, values


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, data: dict):
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=False) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


TIMING_KEYS = ("wall_time", "seconds")


def drop_timing(obj):
    """Copy of a JSON-like object without timing fields."""
    if isinstance(obj, dict):
        return {k: drop_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [drop_timing(v) for v in obj]
    return obj


def file_hash(path) -> str:
    """sha256 of the file; JSON files are hashed without their timing fields."""
    data = Path(path).read_bytes()
    if Path(path).suffix == ".json":
        try:
            canon = drop_timing(json.loads(data))
            data = json.dumps(canon, sort_keys=True).encode()
        except (json.JSONDecodeError, UnicodeDecodeError):
            pass
    return hashlib.sha256(data).hexdigest()


def manifest(command: str, config: dict, inputs=(), seed=None, wall_time=None) -> dict:
    return {"command": command, "config": config,
            "inputs": {str(p): file_hash(p) for p in inputs},
            "seed": seed, "version": __version__, "wall_time": wall_time}
