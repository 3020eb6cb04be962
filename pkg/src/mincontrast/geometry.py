"""Rectangular windows, multitype point patterns and exact pair search."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyErosion, ValidationError


@dataclass(frozen=True)
class RectWindow:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        vals = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(np.isfinite(v) for v in vals):
            raise ValidationError(f"window bounds must be finite, got {vals}")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValidationError(f"degenerate window {vals}")

    @classmethod
    def square(cls, lo: float, hi: float) -> "RectWindow":
        return cls(lo, hi, lo, hi)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def area(self) -> float:
        return self.width * self.height

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)

    def as_list(self) -> list[float]:
        return [self.xmin, self.xmax, self.ymin, self.ymax]


def erode(window: RectWindow, depth: float) -> RectWindow:
    """Shrink every side of ``window`` inward by ``depth``."""
    if depth < 0:
        raise ValidationError(f"erosion depth must be >= 0, got {depth}")
    if 2 * depth >= window.width or 2 * depth >= window.height:
        raise EmptyErosion(
            f"eroding {window.width:g} x {window.height:g} window by {depth:g} leaves nothing"
        )
    return RectWindow(window.xmin + depth, window.xmax - depth,
                      window.ymin + depth, window.ymax - depth)


@dataclass(frozen=True, eq=False)
class PointPattern:
    """Marked planar points. Marks are 1-based type indices in ``1..m``."""

    x: np.ndarray
    y: np.ndarray
    marks: np.ndarray
    window: RectWindow
    m: int
    labels: tuple = field(default=())

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float)
        marks = np.ascontiguousarray(self.marks, dtype=np.int64)
        if not (x.shape == y.shape == marks.shape) or x.ndim != 1:
            raise ValidationError("x, y and marks must be 1-d arrays of equal length")
        if self.m < 1:
            raise ValidationError(f"number of types must be >= 1, got {self.m}")
        if marks.size and (marks.min() < 1 or marks.max() > self.m):
            raise ValidationError(f"marks must lie in 1..{self.m}")
        if not np.all(self.window.contains(x, y)):
            raise ValidationError("all points must lie inside the window")
        for arr in (x, y, marks):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "marks", marks)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(k) for k in range(1, self.m + 1)))

    @classmethod
    def from_types(cls, coords_by_type, window: RectWindow, labels=()) -> "PointPattern":
        """Build from a sequence of (n_i, 2) coordinate arrays, one per type."""
        xs, ys, ms = [], [], []
        for k, pts in enumerate(coords_by_type, start=1):
            pts = np.asarray(pts, dtype=float).reshape(-1, 2)
            xs.append(pts[:, 0])
            ys.append(pts[:, 1])
            ms.append(np.full(len(pts), k, dtype=np.int64))
        return cls(np.concatenate(xs), np.concatenate(ys), np.concatenate(ms),
                   window, len(coords_by_type), tuple(labels))

    def __len__(self) -> int:
        return self.x.size

    def coords(self, i: int | None = None) -> np.ndarray:
        if i is None:
            return np.column_stack([self.x, self.y])
        sel = self.marks == i
        return np.column_stack([self.x[sel], self.y[sel]])

    def counts(self) -> np.ndarray:
        return np.bincount(self.marks, minlength=self.m + 1)[1:]


def intensity_estimates(pattern: PointPattern) -> np.ndarray:
    """Per-type intensity ``N_i / |D|``."""
    return pattern.counts() / pattern.window.area()


def _distances(ax, ay, bx, by):
    # the single distance formula used everywhere, so thresholds agree bitwise
    dx = ax - bx
    dy = ay - by
    return np.sqrt(dx * dx + dy * dy)


def all_pairs(pattern: PointPattern, rmax: float):
    """Every ordered pair (a, b), a != b, with ``0 < |x_a - x_b| <= rmax``.

    Returns index arrays ``a``, ``b`` and distances ``d`` in a canonical order
    (sorted by distance, then a, then b), so any prefix of the list is
    independent of ``rmax``.
    """
    if rmax <= 0:
        raise ValidationError(f"rmax must be > 0, got {rmax}")
    n = len(pattern)
    if n < 2:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), np.empty(0)
    tree = cKDTree(pattern.coords())
    # slightly inflated search radius, then exact filtering with our own distances
    pairs = tree.query_pairs(rmax * (1 + 1e-9) + 1e-300, output_type="ndarray")
    if pairs.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), np.empty(0)
    a = np.concatenate([pairs[:, 0], pairs[:, 1]]).astype(np.int64)
    b = np.concatenate([pairs[:, 1], pairs[:, 0]]).astype(np.int64)
    d = _distances(pattern.x[a], pattern.y[a], pattern.x[b], pattern.y[b])
    keep = (d > 0) & (d <= rmax)
    a, b, d = a[keep], b[keep], d[keep]
    order = np.lexsort((b, a, d))
    return a[order], b[order], d[order]


def pairwise_within(pattern: PointPattern, i: int, j: int, rmax: float):
    """Ordered pairs from type ``i`` to type ``j`` closer than ``rmax``.

    Returns ``(src, d)``: the source point coordinates (k, 2) and distances.
    """
    a, b, d = all_pairs(pattern, rmax)
    sel = (pattern.marks[a] == i) & (pattern.marks[b] == j)
    src = np.column_stack([pattern.x[a[sel]], pattern.y[a[sel]]])
    return src, d[sel]
