"""Minimum-contrast fitting of the bivariate LGCP."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .contrast import ContrastConfig, contrast_values
from .errors import DegenerateInput, NonConvergence, ValidationError
from .geometry import PointPattern, intensity_estimates
from .kfunc import k_matrix, scale_by_intensity, symmetrize
from .lgcp import LgcpParams, model_curves

log = logging.getLogger(__name__)

THETA_MAX = 1e6
THETA_MIN = 1e-10


@dataclass
class FitOptions:
    max_evals: int = 5000
    xatol: float = 1e-6  # log-parameter units, i.e. relative on theta
    frtol: float = 1e-8  # relative to the contrast at the starting point
    simplex_step: float = 0.5
    restarts: int = 2
    multistart: int = 0
    seed: int = 0
    trace: bool = False


@dataclass
class FitResult:
    theta_hat: LgcpParams
    u_min: float
    iterations: int
    n_evals: int
    converged: bool
    at_bound: bool = False
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"theta_hat": self.theta_hat.to_dict(), "u_min": self.u_min,
               "iterations": self.iterations, "n_evals": self.n_evals,
               "converged": self.converged, "at_bound": self.at_bound}
        if self.trace:
            out["trace"] = [{"theta": list(t), "u": u} for t, u in self.trace]
        return out


def initial_theta(pattern: PointPattern, b: int = 1) -> LgcpParams:
    """Common start: sigma_i = sqrt(log N / 10), phi_i = L / 10.

    N is the total count; L is the window side length (sqrt of the area for
    non-square windows). ``mu_i`` are plugged in as ``log(lambda_hat_i)``.
    """
    if pattern.m != 2:
        raise ValidationError(f"m=2 required, pattern has m={pattern.m}")
    n = len(pattern)
    if n < 2 or np.log(n) <= 0:
        raise DegenerateInput(f"need at least 2 points to initialize, got {n}")
    sigma = np.sqrt(np.log(n) / 10.0)
    phi = np.sqrt(pattern.window.area()) / 10.0
    lam = intensity_estimates(pattern)
    with np.errstate(divide="ignore"):
        mu = np.where(lam > 0, np.log(np.where(lam > 0, lam, 1.0)), 0.0)
    return LgcpParams(sigma, phi, sigma, phi, sigma, phi, b=b, mu1=float(mu[0]), mu2=float(mu[1]))


def empirical_curves(pattern: PointPattern, config: ContrastConfig, pairs=None, table=None):
    """K-hat (or Q-hat for the adjusted family) on the config grid.

    ``table`` is an optional prebuilt ``PairTable`` covering ``config.R``.
    """
    if pattern.m != 2:
        raise ValidationError(f"m=2 required, pattern has m={pattern.m}")
    if table is not None and config.correction != "border":
        km = table.curves(config.grid)
    else:
        km = k_matrix(pattern, config.grid, config.correction, pairs)
    if config.family == "Q":
        km = scale_by_intensity(km)
    return symmetrize(km) if config.symmetrize else km


def _to_theta(x):
    return np.exp(np.clip(x, np.log(THETA_MIN), np.log(THETA_MAX)))


class Objective:
    """Contrast as a function of log(theta), with every evaluation recorded."""

    def __init__(self, empirical: np.ndarray, base: LgcpParams, config: ContrastConfig):
        self.empirical = np.asarray(empirical, dtype=float)
        self.base = base
        self.config = config
        self.grid = config.grid
        self.evals: list[tuple[np.ndarray, float]] = []

    def value(self, theta) -> float:
        mc = model_curves(self.base.with_theta(theta), self.grid, family=self.config.family)
        return contrast_values(mc.K, self.empirical, self.config.power)

    def __call__(self, x) -> float:
        theta = _to_theta(np.asarray(x, dtype=float))
        u = self.value(theta)
        if not np.isfinite(u):
            u = np.inf
        self.evals.append((theta, u))
        return u

    def best(self):
        us = np.array([u for _, u in self.evals])
        k = int(np.argmin(us))  # first reached wins ties
        return self.evals[k][0], float(us[k])


def _simplex(x0, step):
    return np.vstack([x0] + [x0 + step * e for e in np.eye(len(x0))])


def fit_curves(empirical: np.ndarray, base: LgcpParams, config: ContrastConfig,
               options: FitOptions | None = None, start: LgcpParams | None = None) -> FitResult:
    """Minimize the contrast against precomputed empirical curves."""
    options = options or FitOptions()
    start = start or base
    obj = Objective(empirical, base, config)
    x_start = np.log(np.maximum(start.theta, THETA_MIN))
    u0 = obj(x_start)
    fatol = options.frtol * max(u0, np.finfo(float).tiny)

    starts = [x_start]
    rng = np.random.default_rng(options.seed)
    for _ in range(options.multistart):
        starts.append(x_start + rng.normal(scale=options.simplex_step, size=x_start.size))

    iterations = 0
    converged = False
    for x0 in starts:
        x = x0
        for attempt in range(1 + options.restarts):
            remaining = options.max_evals - len(obj.evals)
            if remaining <= len(x) + 1:
                break
            res = minimize(obj, x, method="Nelder-Mead",
                           options={"initial_simplex": _simplex(x, options.simplex_step / (1 + 4 * attempt)),
                                    "xatol": options.xatol, "fatol": fatol,
                                    "maxfev": remaining, "adaptive": False})
            iterations += int(res.nit)
            converged = bool(res.status == 0)
            moved = np.max(np.abs(res.x - x))
            x = res.x
            if not converged or (attempt > 0 and moved <= options.xatol):
                break

    theta, u_min = obj.best()
    result = FitResult(base.with_theta(theta), u_min, iterations, len(obj.evals), converged,
                       bool(np.any(theta >= THETA_MAX * (1 - 1e-12))),
                       list(obj.evals) if options.trace else [])
    if result.at_bound:
        log.warning("fit reached the parameter guard %g: %s", THETA_MAX, theta)
    return result


def fit(pattern: PointPattern, config: ContrastConfig | None = None, b: int = 1,
        options: FitOptions | None = None, pairs=None, raise_on_failure: bool = False) -> FitResult:
    """Fit theta to a bivariate pattern; b and mu are held fixed."""
    config = config or ContrastConfig()
    base = initial_theta(pattern, b)
    emp = empirical_curves(pattern, config, pairs)
    result = fit_curves(emp.values, base, config, options)
    if raise_on_failure and not result.converged:
        raise NonConvergence("Nelder-Mead budget exhausted", result)
    return result
