"""Simulation of the bivariate LGCP and homogeneous Poisson patterns.

Gaussian fields live on cell centres of a regular grid; points are drawn per
cell from a Poisson count with the cell's (piecewise constant) intensity and
placed uniformly inside the cell.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cholesky

from .errors import EmbeddingFailure, ValidationError
from .geometry import PointPattern, RectWindow
from .lgcp import LgcpParams

log = logging.getLogger(__name__)

EIG_RTOL = 1e-9
CHOLESKY_MAX_CELLS = 64 * 64
METHODS = ("auto", "circulant", "cholesky")

# stream ids within one replicate
_Z1, _Z2, _Z3, _POINTS = range(4)


@dataclass(frozen=True)
class GridField:
    window: RectWindow
    values: np.ndarray  # (nx, ny), cell-centre values

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    def cell_area(self) -> float:
        return self.window.area() / (self.nx * self.ny)

    def centres(self):
        w = self.window
        cx = w.xmin + (np.arange(self.nx) + 0.5) * w.width / self.nx
        cy = w.ymin + (np.arange(self.ny) + 0.5) * w.height / self.ny
        return cx, cy


@dataclass(frozen=True)
class SimConfig:
    params: LgcpParams
    window: RectWindow = RectWindow(-5.0, 5.0, -5.0, 5.0)
    resolution: int = 128
    seed: int = 0
    replicates: int = 1
    method: str = "auto"

    def __post_init__(self):
        if min(_shape(self.window, self.resolution)) < 2:
            raise ValidationError(f"resolution must be >= 2, got {self.resolution}")
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.replicates < 0:
            raise ValidationError("replicates must be >= 0")


def replicate_rng(seed: int, replicate: int, stream: int) -> np.random.Generator:
    """Independent generator for one (seed, replicate, stream) triple."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), replicate, stream]))


def _shape(window, resolution):
    if np.ndim(resolution) == 0:
        return int(resolution), int(resolution)
    nx, ny = resolution
    return int(nx), int(ny)


@lru_cache(maxsize=64)
def _circulant_sqrt_eigs(nx, ny, dx, dy, sigma, phi, pad, force=False):
    mx, my = pad * nx, pad * ny
    lx = np.minimum(np.arange(mx), mx - np.arange(mx)) * dx
    ly = np.minimum(np.arange(my), my - np.arange(my)) * dy
    r = np.hypot(lx[:, None], ly[None, :])
    base = sigma * sigma * np.exp(-r / phi)
    eig = np.fft.fft2(base).real
    lo = eig.min()
    if lo < -EIG_RTOL * eig.max() and not force:
        return None, lo / eig.max()
    if lo < 0:
        log.warning("clamping circulant eigenvalues down to %.3g", lo)
    out = np.sqrt(np.maximum(eig, 0.0) / (mx * my))
    out.setflags(write=False)
    return out, lo / eig.max()


@lru_cache(maxsize=16)
def _cholesky_factor(nx, ny, dx, dy, sigma, phi):
    cx = (np.arange(nx) + 0.5) * dx
    cy = (np.arange(ny) + 0.5) * dy
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    cov = sigma * sigma * np.exp(-d / phi)
    cov[np.diag_indices_from(cov)] *= 1 + 1e-12
    L = cholesky(cov, lower=True)
    L.setflags(write=False)
    return L


def sample_grf(sigma: float, phi: float, window: RectWindow, resolution, rng: np.random.Generator,
               method: str = "auto", pad: int = 2) -> GridField:
    """Zero-mean Gaussian field with covariance ``sigma^2 exp(-r/phi)`` at cell centres."""
    if sigma < 0 or not phi > 0:
        raise ValidationError(f"need sigma >= 0 and phi > 0, got sigma={sigma}, phi={phi}")
    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}, got {method!r}")
    nx, ny = _shape(window, resolution)
    if nx < 2 or ny < 2:
        raise ValidationError("grid needs at least 2 cells per axis")
    if sigma == 0:
        return GridField(window, np.zeros((nx, ny)))
    dx, dy = window.width / nx, window.height / ny

    if method in ("auto", "circulant"):
        pads = (pad,) if method == "circulant" else (pad, 2 * pad, 4 * pad)
        for p in pads:
            lam, ratio = _circulant_sqrt_eigs(nx, ny, dx, dy, float(sigma), float(phi), p)
            if lam is not None:
                mx, my = lam.shape
                w = rng.standard_normal((mx, my)) + 1j * rng.standard_normal((mx, my))
                field = np.fft.fft2(lam * w).real[:nx, :ny]
                return GridField(window, field)
        if method == "circulant":
            raise EmbeddingFailure(
                f"circulant embedding has negative eigenvalues (min/max = {ratio:.3g})")
        if nx * ny > CHOLESKY_MAX_CELLS:
            # range too long for the grid; approximate by clamping the spectrum
            lam, _ = _circulant_sqrt_eigs(nx, ny, dx, dy, float(sigma), float(phi), pads[-1], True)
            mx, my = lam.shape
            w = rng.standard_normal((mx, my)) + 1j * rng.standard_normal((mx, my))
            return GridField(window, np.fft.fft2(lam * w).real[:nx, :ny])
        log.info("circulant embedding failed, falling back to cholesky")
    if nx * ny > CHOLESKY_MAX_CELLS:
        raise ValidationError(f"cholesky path limited to {CHOLESKY_MAX_CELLS} cells")
    L = _cholesky_factor(nx, ny, dx, dy, float(sigma), float(phi))
    return GridField(window, (L @ rng.standard_normal(nx * ny)).reshape(nx, ny))


def _points_from_intensity(intensity: np.ndarray, window: RectWindow, rng):
    nx, ny = intensity.shape
    dx, dy = window.width / nx, window.height / ny
    counts = rng.poisson(intensity * dx * dy)
    ix, iy = np.nonzero(counts)
    reps = counts[ix, iy]
    ix = np.repeat(ix, reps)
    iy = np.repeat(iy, reps)
    n = ix.size
    u = rng.random((n, 2))
    x = window.xmin + (ix + u[:, 0]) * dx
    y = window.ymin + (iy + u[:, 1]) * dy
    # keep points on the closed window despite rounding
    return np.column_stack([np.clip(x, window.xmin, window.xmax),
                            np.clip(y, window.ymin, window.ymax)])


def latent_fields(params: LgcpParams, window: RectWindow, resolution, seed: int,
                  replicate: int = 0, method: str = "auto"):
    """The two Gaussian log-intensity fields ``Y1, Y2`` (mean offsets included)."""
    p = params
    z1 = sample_grf(p.sigma1, p.phi1, window, resolution, replicate_rng(seed, replicate, _Z1), method)
    z2 = sample_grf(p.sigma2, p.phi2, window, resolution, replicate_rng(seed, replicate, _Z2), method)
    z3 = sample_grf(p.sigma3, p.phi3, window, resolution, replicate_rng(seed, replicate, _Z3), method)
    y1 = -(p.sigma1 ** 2 + p.sigma3 ** 2) / 2 + z1.values + z3.values
    y2 = -(p.sigma2 ** 2 + p.sigma3 ** 2) / 2 + z2.values + p.b * z3.values
    return y1, y2


def sample_lgcp(config: SimConfig, replicate: int = 0) -> PointPattern:
    """One bivariate LGCP pattern; fully determined by (seed, replicate)."""
    p = config.params
    y1, y2 = latent_fields(p, config.window, config.resolution, config.seed, replicate, config.method)
    rng = replicate_rng(config.seed, replicate, _POINTS)
    pts1 = _points_from_intensity(np.exp(p.mu1 + y1), config.window, rng)
    pts2 = _points_from_intensity(np.exp(p.mu2 + y2), config.window, rng)
    return PointPattern.from_types([pts1, pts2], config.window)


def sample_poisson(lam: float, window: RectWindow, rng: np.random.Generator) -> PointPattern:
    """Homogeneous Poisson pattern with a single type."""
    if lam < 0:
        raise ValidationError(f"intensity must be >= 0, got {lam}")
    n = rng.poisson(lam * window.area())
    u = rng.random((n, 2))
    x = window.xmin + u[:, 0] * window.width
    y = window.ymin + u[:, 1] * window.height
    return PointPattern(x, y, np.ones(n, dtype=np.int64), window, 1)
