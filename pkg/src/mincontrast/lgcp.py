"""Bivariate log-Gaussian Cox process under a linear model of coregionalization.

Latent fields ``Y1 = Z1 + Z3`` and ``Y2 = Z2 + b Z3`` (plus mean offsets), each
``Z_i`` with covariance ``sigma_i^2 exp(-r / phi_i)``. The model K-function is
``K_ij(r) = 2 pi int_0^r h exp(C_ij(h)) dh``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ValidationError
from .kfunc import DistanceGrid

THETA_NAMES = ("sigma1", "phi1", "sigma2", "phi2", "sigma3", "phi3")
SIMPSON_PANELS = 8


@dataclass(frozen=True)
class LgcpParams:
    sigma1: float
    phi1: float
    sigma2: float
    phi2: float
    sigma3: float
    phi3: float
    b: int = 1
    mu1: float = 0.0
    mu2: float = 0.0

    def __post_init__(self):
        for name in THETA_NAMES:
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
            # sigma = 0 is allowed as the Poisson limit; the CLI is stricter
            if name.startswith("phi") and not v > 0:
                raise ValidationError(f"{name} must be > 0, got {v}")
            if name.startswith("sigma") and v < 0:
                raise ValidationError(f"{name} must be >= 0, got {v}")
        if self.b not in (-1, 1):
            raise ValidationError(f"b must be -1 or +1, got {self.b}")
        for name in ("mu1", "mu2"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")

    @property
    def theta(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in THETA_NAMES], dtype=float)

    def with_theta(self, theta) -> "LgcpParams":
        return replace(self, **{n: float(v) for n, v in zip(THETA_NAMES, theta)})

    @property
    def mu(self) -> np.ndarray:
        return np.array([self.mu1, self.mu2])

    @property
    def intensities(self) -> np.ndarray:
        return np.exp(self.mu)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "LgcpParams":
        missing = [k for k in THETA_NAMES if k not in d]
        if missing:
            raise ValidationError(f"model config missing keys: {missing}")
        kw = {k: float(d[k]) for k in THETA_NAMES}
        kw["b"] = int(d.get("b", 1))
        kw["mu1"] = float(d.get("mu1", 0.0))
        kw["mu2"] = float(d.get("mu2", 0.0))
        return cls(**kw)


# Benchmark data-generating processes; b and mu are set per scenario.
M1 = LgcpParams(1.0, 0.5, 0.8, 1.0, 0.4, 1.5)
M2 = LgcpParams(0.8, 0.5, 0.6, 1.0, 0.5, 1.5)
M3 = LgcpParams(0.7, 0.5, 0.4, 1.3, 0.6, 1.0)
M4 = LgcpParams(0.5, 0.5, 0.4, 1.3, 0.8, 1.0)
MODELS = {"M1": M1, "M2": M2, "M3": M3, "M4": M4}


def _component(sigma, phi, r):
    return sigma * sigma * np.exp(-r / phi)


def cov(i: int, j: int, r, params: LgcpParams):
    """Covariance of ``log Lambda_i`` and ``log Lambda_j`` at lag ``r``."""
    p = params
    r = np.asarray(r, dtype=float)
    shared = _component(p.sigma3, p.phi3, r)
    if i == j == 1:
        return _component(p.sigma1, p.phi1, r) + shared
    if i == j == 2:
        return _component(p.sigma2, p.phi2, r) + shared
    if {i, j} == {1, 2}:
        return p.b * shared
    raise ValidationError(f"type indices must be 1 or 2, got ({i}, {j})")


def cov_grad(i: int, j: int, r, params: LgcpParams) -> np.ndarray:
    """d C_ij / d theta, shape ``r.shape + (6,)``."""
    p = params
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape + (6,))

    def fill(slot, sigma, phi, sign=1.0):
        e = np.exp(-r / phi)
        out[..., 2 * slot] = sign * 2.0 * sigma * e
        out[..., 2 * slot + 1] = sign * sigma * sigma * r / (phi * phi) * e

    if i == j == 1:
        fill(0, p.sigma1, p.phi1)
        fill(2, p.sigma3, p.phi3)
    elif i == j == 2:
        fill(1, p.sigma2, p.phi2)
        fill(2, p.sigma3, p.phi3)
    elif {i, j} == {1, 2}:
        fill(2, p.sigma3, p.phi3, float(p.b))
    else:
        raise ValidationError(f"type indices must be 1 or 2, got ({i}, {j})")
    return out


def rho(params: LgcpParams) -> float:
    """Correlation of the two log-intensity fields at a common location."""
    p = params
    v3 = p.sigma3 ** 2
    denom = np.sqrt((p.sigma1 ** 2 + v3) * (p.sigma2 ** 2 + v3))
    if denom == 0:
        return 0.0
    return float(p.b * v3 / denom)


def rho_grad(params: LgcpParams) -> np.ndarray:
    p = params
    s1, s2, s3 = p.sigma1 ** 2, p.sigma2 ** 2, p.sigma3 ** 2
    a, c = s1 + s3, s2 + s3
    r = p.b * s3 / np.sqrt(a * c)
    g = np.zeros(6)
    g[0] = -r * p.sigma1 / a
    g[2] = -r * p.sigma2 / c
    g[4] = r * (2.0 / p.sigma3 - p.sigma3 / a - p.sigma3 / c) if p.sigma3 > 0 else 0.0
    return g


def corr_at(i: int, j: int, r, params: LgcpParams):
    """``C_ij(r) / sqrt(C_ii(0) C_jj(0))``."""
    return cov(i, j, r, params) / np.sqrt(cov(i, i, 0.0, params) * cov(j, j, 0.0, params))


def _fine_nodes(nodes, panels):
    """Simpson subnodes: ``2 * panels`` subintervals between consecutive nodes."""
    edges = np.concatenate([[0.0], nodes])
    sub = 2 * panels
    frac = np.arange(sub) / sub
    fine = (edges[:-1, None] + np.diff(edges)[:, None] * frac[None, :]).ravel()
    return np.concatenate([fine, [edges[-1]]]), np.diff(edges) / sub


def _cumulative_simpson(f, step, panels):
    """Cumulative Simpson integrals at each node; ``f`` has the node axis first."""
    n = step.size
    sub = 2 * panels
    body = f[:-1].reshape((n, sub) + f.shape[1:])
    nxt = np.concatenate([body[1:, :1], f[-1:][None]], axis=0)
    coef = np.ones(sub)
    coef[1::2] = 4.0
    coef[2::2] = 2.0
    coef_shape = (1, sub) + (1,) * (f.ndim - 1)
    per_step = (body * coef.reshape(coef_shape)).sum(axis=1) + nxt[:, 0]
    step_shape = (n,) + (1,) * (f.ndim - 1)
    return np.cumsum(per_step * (step / 3.0).reshape(step_shape), axis=0)


def _k_on_nodes(i, j, nodes, params, with_grad, panels):
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size == 0:
        return np.empty(0), np.empty((0, 6))
    fine, step = _fine_nodes(nodes, panels)
    ec = 2.0 * np.pi * fine * np.exp(cov(i, j, fine, params))
    k = _cumulative_simpson(ec, step, panels)
    if not with_grad:
        return k, None
    g = _cumulative_simpson(ec[:, None] * cov_grad(i, j, fine, params), step, panels)
    return k, g


def model_k(i: int, j: int, r, params: LgcpParams, panels: int = SIMPSON_PANELS, steps: int = 64):
    """Model K_ij at arbitrary distance(s) ``r`` (each integrated from 0)."""
    r = np.asarray(r, dtype=float)
    flat = r.ravel()
    out = np.zeros(flat.shape)
    for idx, rv in enumerate(flat):
        if rv < 0:
            raise ValidationError(f"r must be >= 0, got {rv}")
        if rv > 0:
            out[idx] = _k_on_nodes(i, j, rv * np.arange(1, steps + 1) / steps, params,
                                   False, panels)[0][-1]
    return out.reshape(r.shape) if r.ndim else float(out[0])


def model_k_grad(i: int, j: int, r: float, params: LgcpParams,
                 panels: int = SIMPSON_PANELS, steps: int = 64) -> np.ndarray:
    """Gradient of K_ij(r) with respect to (sigma1, phi1, sigma2, phi2, sigma3, phi3)."""
    if r < 0:
        raise ValidationError(f"r must be >= 0, got {r}")
    if r == 0:
        return np.zeros(6)
    return _k_on_nodes(i, j, r * np.arange(1, steps + 1) / steps, params, True, panels)[1][-1]


def adjusted_q(i: int, j: int, r, params: LgcpParams):
    return np.exp(params.mu[i - 1] + params.mu[j - 1]) * model_k(i, j, r, params)


@dataclass(frozen=True, eq=False)
class ModelCurves:
    """Model K (or Q) matrix and its theta-gradient tabulated on a grid."""

    grid: DistanceGrid
    K: np.ndarray  # (2, 2, n0)
    gradK: np.ndarray | None  # (2, 2, n0, 6)
    scaled: bool = False


def model_curves(params: LgcpParams, grid: DistanceGrid, with_grad: bool = False,
                 family: str = "K", panels: int = SIMPSON_PANELS) -> ModelCurves:
    nodes = grid.nodes
    K = np.empty((2, 2, grid.n0))
    G = np.empty((2, 2, grid.n0, 6)) if with_grad else None
    for i, j in ((1, 1), (1, 2), (2, 2)):
        k, g = _k_on_nodes(i, j, nodes, params, with_grad, panels)
        K[i - 1, j - 1] = K[j - 1, i - 1] = k
        if with_grad:
            G[i - 1, j - 1] = G[j - 1, i - 1] = g
    if family == "Q":
        scale = np.exp(params.mu[:, None] + params.mu[None, :])
        K = K * scale[:, :, None]
        if with_grad:
            G = G * scale[:, :, None, None]
    elif family != "K":
        raise ValidationError(f"family must be 'K' or 'Q', got {family!r}")
    return ModelCurves(grid, K, G, family == "Q")
