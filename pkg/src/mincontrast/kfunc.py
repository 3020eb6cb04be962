"""Nonparametric marginal/cross K-function estimators on a distance grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, ValidationError, WeightOverflow, ZeroIntensity
from .geometry import PointPattern, RectWindow, all_pairs, erode, intensity_estimates

CORRECTIONS = ("none", "border", "isotropic")


@dataclass(frozen=True)
class DistanceGrid:
    """Evaluation nodes ``h_k = R k / n0`` for ``k = 1..n0``."""

    R: float
    n0: int

    def __post_init__(self):
        if not self.R > 0:
            raise ValidationError(f"R must be > 0, got {self.R}")
        if int(self.n0) != self.n0 or self.n0 < 1:
            raise ValidationError(f"n0 must be a positive integer, got {self.n0}")

    @property
    def nodes(self) -> np.ndarray:
        return self.R * np.arange(1, self.n0 + 1) / self.n0

    @property
    def dh(self) -> float:
        return self.R / self.n0


@dataclass(frozen=True, eq=False)
class KCurveMatrix:
    """``values[i, j, k]`` is the (i+1, j+1) curve at node ``grid.nodes[k]``."""

    grid: DistanceGrid
    values: np.ndarray
    correction: str
    scaled: bool = False
    lambdas: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def entry(self, i: int, j: int) -> np.ndarray:
        return self.values[i - 1, j - 1]

    def check_grid(self, grid: DistanceGrid):
        if self.grid != grid:
            raise GridMismatch(f"curves tabulated on {self.grid}, expected {grid}")


def isotropic_fraction(x, y, t, window: RectWindow) -> np.ndarray:
    """Fraction of the circle of radius ``t`` about (x, y) lying inside ``window``.

    Arc angles cut off by each side are added, and the overlap of two adjacent
    cut-offs (present when the corner lies inside the circle) is subtracted.
    Arcs cut by opposite sides can never overlap.
    """
    x, y, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float),
                                  np.asarray(t, float))
    with np.errstate(divide="ignore", invalid="ignore"):
        half = [np.arccos(np.clip(d / t, -1.0, 1.0)) for d in
                (x - window.xmin, window.xmax - x, y - window.ymin, window.ymax - y)]
    left, right, bottom, top = (np.where(t > 0, a, 0.0) for a in half)
    outside = 2.0 * (left + right + bottom + top)
    for u, v in ((left, bottom), (left, top), (right, bottom), (right, top)):
        outside = outside - np.maximum(u + v - np.pi / 2, 0.0)
    return 1.0 - outside / (2.0 * np.pi)


def _pair_weights(pattern, a, d, correction, grid):
    if correction == "none":
        return np.ones_like(d), pattern.window.area()
    if correction == "border":
        inner = erode(pattern.window, grid.R)
        return inner.contains(pattern.x[a], pattern.y[a]).astype(float), inner.area()
    if correction == "isotropic":
        p = isotropic_fraction(pattern.x[a], pattern.y[a], d, pattern.window)
        if np.any(p <= 0):
            raise WeightOverflow("isotropic edge weight undefined (zero circle fraction)")
        return 1.0 / p, pattern.window.area()
    raise ValidationError(f"unknown edge correction {correction!r}; use one of {CORRECTIONS}")


class PairTable:
    """Per type-pair sorted distances with cumulative edge-correction weights.

    Built once up to ``rmax``; curves for any grid with ``R <= rmax`` are read
    off by binary search. Because pairs are in canonical order, the values do
    not depend on ``rmax``. The border correction ties the weights to one
    erosion depth, given by ``border_R``.
    """

    def __init__(self, pattern: PointPattern, rmax: float, correction: str = "isotropic",
                 pairs=None, border_R: float | None = None):
        lam = intensity_estimates(pattern)
        if np.any(lam <= 0):
            raise ZeroIntensity(
                f"every type needs at least one point, counts={pattern.counts().tolist()}")
        if pairs is None:
            pairs = all_pairs(pattern, rmax)
        a, b, d = pairs
        n_keep = np.searchsorted(d, rmax, side="right")
        a, b, d = a[:n_keep], b[:n_keep], d[:n_keep]
        self.border_R = rmax if border_R is None else border_R
        w, self.area = _pair_weights(pattern, a, d, correction, DistanceGrid(self.border_R, 1))
        self.rmax = rmax
        self.correction = correction
        self.lambdas = lam
        self.m = pattern.m
        ti = pattern.marks[a] - 1
        tj = pattern.marks[b] - 1
        self.dist = {}
        self.cum = {}
        for i in range(self.m):
            for j in range(self.m):
                sel = (ti == i) & (tj == j)
                self.dist[i, j] = d[sel]
                self.cum[i, j] = np.concatenate([[0.0], np.cumsum(w[sel])])

    def curves(self, grid: DistanceGrid) -> KCurveMatrix:
        if grid.R > self.rmax:
            raise ValidationError(f"grid R={grid.R} exceeds table range {self.rmax}")
        if self.correction == "border" and grid.R != self.border_R:
            raise ValidationError("border-corrected table is tied to its erosion depth")
        nodes = grid.nodes
        lam = self.lambdas
        values = np.zeros((self.m, self.m, grid.n0))
        for (i, j), d in self.dist.items():
            if d.size:
                values[i, j] = self.cum[i, j][np.searchsorted(d, nodes, side="right")]
                values[i, j] /= self.area * lam[i] * lam[j]
        return KCurveMatrix(grid, values, self.correction, False, lam)


def k_matrix(pattern: PointPattern, grid: DistanceGrid, correction: str = "isotropic",
             pairs=None) -> KCurveMatrix:
    """All m x m marginal and cross K estimates on ``grid``.

    ``K_ij(h) = (|A| l_i l_j)^-1 sum_{x in X_i, y in X_j} w(x, |x-y|) 1{0 < |x-y| <= h}``
    with ``|A| = |D|`` (none, isotropic) or the eroded window area (border), and
    intensities always estimated on the full window.

    ``pairs`` may carry a precomputed ``all_pairs(pattern, rmax)`` result with
    ``rmax >= grid.R``; results do not depend on which rmax was used.
    """
    return PairTable(pattern, grid.R, correction, pairs).curves(grid)


def _single(pattern, i, j, grid, correction):
    km = k_matrix(pattern, grid, correction)
    return km.entry(i, j)


def k_naive(pattern, i, j, grid):
    return _single(pattern, i, j, grid, "none")


def k_border(pattern, i, j, grid):
    return _single(pattern, i, j, grid, "border")


def k_isotropic(pattern, i, j, grid):
    return _single(pattern, i, j, grid, "isotropic")


def symmetrize(curves: KCurveMatrix) -> KCurveMatrix:
    vals = 0.5 * (curves.values + curves.values.transpose(1, 0, 2))
    return KCurveMatrix(curves.grid, vals, curves.correction, curves.scaled, curves.lambdas)


def scale_by_intensity(curves: KCurveMatrix) -> KCurveMatrix:
    lam = curves.lambdas
    vals = curves.values * (lam[:, None] * lam[None, :])[:, :, None]
    return KCurveMatrix(curves.grid, vals, curves.correction, True, lam)


def q_hat(pattern: PointPattern, grid: DistanceGrid, correction: str = "isotropic",
          symmetric: bool = False, pairs=None) -> KCurveMatrix:
    """Intensity-scaled estimate ``l_i l_j K_ij``, optionally symmetrized."""
    q = scale_by_intensity(k_matrix(pattern, grid, correction, pairs))
    return symmetrize(q) if symmetric else q
