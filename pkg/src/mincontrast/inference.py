"""Sandwich covariance of the minimum-contrast estimator and (c, R) selection.

``Sigma = B^-1 S B^-1`` where ``B`` comes from the model curve gradients and
``S`` is the Monte-Carlo variance of the score-like statistic ``V`` over
patterns simulated from the fitted model.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .contrast import ContrastConfig
from .errors import MinContrastError, SingularB, ValidationError
from .fitter import FitOptions, empirical_curves, fit
from .geometry import PointPattern, RectWindow, all_pairs
from .kfunc import PairTable
from .lgcp import THETA_NAMES, LgcpParams, corr_at, model_curves, rho, rho_grad
from .simulator import SimConfig, sample_lgcp

log = logging.getLogger(__name__)

COND_MAX = 1e12
MAX_FAIL_FRACTION = 0.05
Z95 = 1.959963984540054


def b_matrix_from_curves(K, gradK, power, dh) -> np.ndarray:
    """``sum_ij c_ij^2 sum_k K_ij^(2c_ij - 2) grad K_ij grad K_ij^T dh``."""
    K = np.asarray(K, float)
    G = np.asarray(gradK, float)
    wt = power[:, :, None] ** 2 * K ** (2 * power[:, :, None] - 2) * dh
    B = np.einsum("ijk,ijkp,ijkq->pq", wt, G, G)
    return 0.5 * (B + B.T)


def b_matrix(params: LgcpParams, config: ContrastConfig) -> np.ndarray:
    mc = model_curves(params, config.grid, with_grad=True, family=config.family)
    return b_matrix_from_curves(mc.K, mc.gradK, config.power, config.grid.dh)


def _v_weights(K, gradK, power, dh):
    """Per-node weights ``c^2 K^(2c-2) grad K dh``, shape (m, m, n0, p)."""
    return (power[:, :, None] ** 2 * K ** (2 * power[:, :, None] - 2) * dh)[..., None] * gradK


def v_from_curves(K_hat, K, gradK, power, dh, area) -> np.ndarray:
    """``sqrt|D| sum_ij c^2 sum_k (Khat - K) K^(2c-2) grad K dh``."""
    W = _v_weights(np.asarray(K, float), np.asarray(gradK, float), power, dh)
    return np.sqrt(area) * np.einsum("ijk,ijkp->p", np.asarray(K_hat, float) - K, W)


def v_statistic(pattern: PointPattern, params: LgcpParams, config: ContrastConfig,
                pairs=None) -> np.ndarray:
    mc = model_curves(params, config.grid, with_grad=True, family=config.family)
    emp = empirical_curves(pattern, config, pairs)
    return v_from_curves(emp.values, mc.K, mc.gradK, config.power, config.grid.dh,
                         pattern.window.area())


@dataclass
class CovarianceReport:
    theta_hat: LgcpParams
    config: ContrastConfig
    area: float
    B: np.ndarray
    S: np.ndarray
    Sigma: np.ndarray
    se: np.ndarray
    det_sigma: float
    logdet_cov: float
    nsim: int
    n_failed: int = 0
    ci_asym: np.ndarray | None = None
    ci_sim: np.ndarray | None = None
    rho_hat: float = float("nan")
    rho_se: float = float("nan")
    rho_ci_asym: tuple = (float("nan"), float("nan"))
    rho_ci_sim: tuple = (float("nan"), float("nan"))
    replicate_thetas: np.ndarray | None = None
    n_flagged: int = 0

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()
        return {
            "theta_hat": self.theta_hat.to_dict(), "config": self.config.to_dict(),
            "area": self.area, "B": arr(self.B), "S": arr(self.S), "Sigma": arr(self.Sigma),
            "se": arr(self.se), "det_sigma": self.det_sigma, "logdet_cov": self.logdet_cov,
            "nsim": self.nsim, "n_failed": self.n_failed, "ci_asym": arr(self.ci_asym),
            "ci_sim": arr(self.ci_sim), "rho_hat": self.rho_hat, "rho_se": self.rho_se,
            "rho_ci_asym": list(self.rho_ci_asym), "rho_ci_sim": list(self.rho_ci_sim),
            "n_flagged": self.n_flagged,
        }


def sigma_hat(B: np.ndarray, S: np.ndarray, area: float = 1.0):
    """``Sigma = B^-1 S B^-1`` plus standard errors ``sqrt(diag Sigma / area)``.

    Returns ``(Sigma, se, det Sigma, log det(Sigma / area))``; the last is the
    log generalized variance of theta-hat itself.
    """
    B = np.atleast_2d(np.asarray(B, float))
    S = np.atleast_2d(np.asarray(S, float))
    if not np.all(np.isfinite(B)):
        raise SingularB("B has non-finite entries")
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond >= COND_MAX:
        raise SingularB(f"B is ill-conditioned (cond = {cond:.3g})")
    Binv = np.linalg.inv(B)
    Sigma = Binv @ S @ Binv
    Sigma = 0.5 * (Sigma + Sigma.T)
    se = np.sqrt(np.maximum(np.diag(Sigma), 0.0) / area)
    det = float(np.linalg.det(Sigma))
    sign, logdet = np.linalg.slogdet(Sigma / area)
    return Sigma, se, det, float(logdet) if sign > 0 else float("nan")


# ---------------------------------------------------------------------------
# Monte-Carlo replicate machinery


@dataclass(frozen=True)
class _CellModel:
    c: float
    R: float
    config: ContrastConfig
    K: np.ndarray
    W: np.ndarray
    B: np.ndarray


def _cell_models(params, base: ContrastConfig, c_grid, r_grid):
    cells = []
    for c in c_grid:
        for R in r_grid:
            cfg = base.with_cr(c, R)
            mc = model_curves(params, cfg.grid, with_grad=True, family=cfg.family)
            W = _v_weights(mc.K, mc.gradK, cfg.power, cfg.grid.dh)
            B = b_matrix_from_curves(mc.K, mc.gradK, cfg.power, cfg.grid.dh)
            cells.append(_CellModel(float(c), float(R), cfg, mc.K, W, B))
    return cells


def _replicate_vs(pattern: PointPattern, cells) -> np.ndarray:
    """V for every cell from one pattern; pairs are searched once."""
    rmax = max(cell.R for cell in cells)
    pairs = all_pairs(pattern, rmax)
    config = cells[0].config
    table = None
    if config.correction != "border":
        table = PairTable(pattern, rmax, config.correction, pairs)
    root_area = np.sqrt(pattern.window.area())
    out = np.empty((len(cells), cells[0].W.shape[-1]))
    cache = {}
    for n, cell in enumerate(cells):
        key = cell.R
        if key not in cache:
            cache[key] = empirical_curves(pattern, cell.config, pairs, table).values
        out[n] = root_area * np.einsum("ijk,ijkp->p", cache[key] - cell.K, cell.W)
    return out


def _simulate_and_v(job):
    sim, r, cells = job
    try:
        return _replicate_vs(sample_lgcp(sim, r), cells)
    except MinContrastError as exc:
        log.debug("replicate %d failed: %s", r, exc)
        return None


def _simulate_and_fit(job):
    sim, r, config, b, options = job
    try:
        return fit(sample_lgcp(sim, r), config, b, options).theta_hat.theta
    except MinContrastError as exc:
        log.debug("replicate %d refit failed: %s", r, exc)
        return None


def _map(func, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(func, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [func(j) for j in jobs]


def _check_failures(n_failed, nsim, what):
    if nsim and n_failed > MAX_FAIL_FRACTION * nsim:
        raise MinContrastError(f"{n_failed} of {nsim} {what} replicates failed")


def replicate_v(params, config: ContrastConfig, c_grid, r_grid, nsim, seed, window,
                resolution=128, method="auto", workers=1):
    """V vectors for every (c, R) cell over ``nsim`` shared simulated replicates.

    Returns ``(cells, V)`` with ``V`` of shape (n_ok, n_cells, 6), and the
    number of failed replicates.
    """
    if nsim < 2:
        raise ValidationError(f"nsim must be >= 2, got {nsim}")
    cells = _cell_models(params, config, c_grid, r_grid)
    sim = SimConfig(params, window, resolution, seed, nsim, method)
    results = _map(_simulate_and_v, [(sim, r, cells) for r in range(nsim)], workers)
    ok = [v for v in results if v is not None]
    n_failed = nsim - len(ok)
    _check_failures(n_failed, nsim, "simulation")
    return cells, np.array(ok), n_failed


def s_from_v(V: np.ndarray) -> np.ndarray:
    S = np.cov(np.asarray(V, float), rowvar=False, ddof=1)
    S = np.atleast_2d(S)
    return 0.5 * (S + S.T)


def s_matrix(params: LgcpParams, config: ContrastConfig, nsim: int = 600, seed: int = 0,
             window: RectWindow = RectWindow(-5, 5, -5, 5), resolution=128, method="auto",
             workers=1) -> np.ndarray:
    _, V, _ = replicate_v(params, config, [config.c], [config.R], nsim, seed, window,
                          resolution, method, workers)
    return s_from_v(V[:, 0, :])


def replicate_fits(params, config, nsim, seed, window, resolution=128, method="auto",
                   options: FitOptions | None = None, workers=1):
    """Refit theta on ``nsim`` patterns simulated from ``params``."""
    sim = SimConfig(params, window, resolution, seed, nsim, method)
    jobs = [(sim, r, config, params.b, options) for r in range(nsim)]
    results = _map(_simulate_and_fit, jobs, workers)
    thetas = np.array([t for t in results if t is not None])
    n_failed = nsim - len(thetas)
    _check_failures(n_failed, nsim, "refit")
    return thetas, n_failed


def covariance_report(theta_hat: LgcpParams, config: ContrastConfig, window: RectWindow,
                      nsim: int = 600, seed: int = 0, resolution=128, method="auto",
                      refit: bool = False, refit_seed: int | None = None,
                      options: FitOptions | None = None, delta_rho: bool = False,
                      workers=1) -> CovarianceReport:
    """Full sandwich estimate at ``theta_hat`` with confidence intervals."""
    area = window.area()
    _, V, n_failed = replicate_v(theta_hat, config, [config.c], [config.R], nsim, seed,
                                 window, resolution, method, workers)
    B = b_matrix(theta_hat, config)
    S = s_from_v(V[:, 0, :])
    Sigma, se, det, logdet = sigma_hat(B, S, area)
    report = CovarianceReport(theta_hat, config, area, B, S, Sigma, se, det, logdet,
                              len(V), n_failed)
    thetas = None
    if refit:
        seed2 = seed + 1 if refit_seed is None else refit_seed
        thetas, _ = replicate_fits(theta_hat, config, nsim, seed2, window, resolution,
                                   method, options, workers)
    return ci_tables(theta_hat, report, thetas, delta_rho)


def ci_tables(theta_hat: LgcpParams, report: CovarianceReport, replicate_thetas=None,
              delta_rho: bool = False) -> CovarianceReport:
    """Fill asymptotic and simulation-based intervals, including those for rho."""
    est = theta_hat.theta
    se = np.asarray(report.se, float)
    report.ci_asym = np.column_stack([est - Z95 * se, est + Z95 * se])
    report.rho_hat = rho(theta_hat)
    if delta_rho or replicate_thetas is None or len(replicate_thetas) < 2:
        g = rho_grad(theta_hat)
        report.rho_se = float(np.sqrt(max(g @ report.Sigma @ g, 0.0) / report.area))
    if replicate_thetas is not None and len(replicate_thetas) >= 2:
        thetas = np.asarray(replicate_thetas, float)
        report.replicate_thetas = thetas
        report.ci_sim = np.quantile(thetas, [0.025, 0.975], axis=0).T
        rhos = np.array([rho(theta_hat.with_theta(t)) for t in thetas])
        if not delta_rho:
            report.rho_se = float(np.std(rhos, ddof=1))
        report.rho_ci_sim = tuple(float(q) for q in np.quantile(rhos, [0.025, 0.975]))
        with np.errstate(invalid="ignore", divide="ignore"):
            far = np.abs(thetas - est) > 3 * se
        report.n_flagged = int(np.sum(np.any(far & (se > 0), axis=1)))
    report.rho_ci_asym = (report.rho_hat - Z95 * report.rho_se,
                          report.rho_hat + Z95 * report.rho_se)
    return report


def correlation_table(params: LgcpParams, distances) -> dict:
    """Marginal and cross log-intensity correlations at each distance."""
    d = np.asarray(distances, float)
    return {"r": d.tolist(),
            "corr11": np.asarray(corr_at(1, 1, d, params)).tolist(),
            "corr22": np.asarray(corr_at(2, 2, d, params)).tolist(),
            "corr12": np.asarray(corr_at(1, 2, d, params)).tolist()}


def report_rows(report: CovarianceReport) -> list[dict]:
    """Table rows: parameter, EST, SD, asymptotic CI, simulation CI."""
    rows = []
    est = report.theta_hat.theta
    for p, name in enumerate(THETA_NAMES):
        rows.append({"param": name, "est": float(est[p]), "sd": float(report.se[p]),
                     "ci_asym": [float(v) for v in report.ci_asym[p]],
                     "ci_sim": None if report.ci_sim is None else [float(v) for v in report.ci_sim[p]]})
    rows.append({"param": "rho", "est": report.rho_hat, "sd": report.rho_se,
                 "ci_asym": list(report.rho_ci_asym),
                 "ci_sim": None if report.ci_sim is None else list(report.rho_ci_sim)})
    return rows


# ---------------------------------------------------------------------------
# control-parameter selection


@dataclass
class SelectionResult:
    c_grid: list
    r_grid: list
    logdet: np.ndarray  # (len(c_grid), len(r_grid)); nan for failed cells
    det: np.ndarray
    c_opt: float
    R_opt: float
    params: LgcpParams
    nsim: int
    n_failed_replicates: int
    failed_cells: list = field(default_factory=list)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        def clean(a):
            return [[None if not np.isfinite(v) else float(v) for v in row] for row in a]
        return {"c_grid": [float(c) for c in self.c_grid], "r_grid": [float(r) for r in self.r_grid],
                "logdet": clean(self.logdet), "det": clean(self.det),
                "c_opt": self.c_opt, "R_opt": self.R_opt, "params": self.params.to_dict(),
                "nsim": self.nsim, "n_failed_replicates": self.n_failed_replicates,
                "failed_cells": self.failed_cells, "seconds": self.seconds}


def select_cr(source, c_grid, r_grid, nsim: int = 600, seed: int = 0,
              config: ContrastConfig | None = None, b: int = 1, window: RectWindow | None = None,
              resolution=128, method="auto", options: FitOptions | None = None,
              workers=1) -> SelectionResult:
    """Minimize ``det Sigma(c, R)`` over the grids.

    ``source`` is either fixed ``LgcpParams`` or a ``PointPattern``; a pattern
    is first fitted once at ``config``'s (c, R) and that fit drives the shared
    simulations. All cells reuse the same replicates.
    """
    t0 = time.perf_counter()
    config = config or ContrastConfig()
    c_grid = [float(c) for c in c_grid]
    r_grid = [float(r) for r in r_grid]
    if not c_grid or not r_grid:
        raise ValidationError("c and R grids must be nonempty")
    if isinstance(source, PointPattern):
        window = window or source.window
        params = fit(source, config, b, options).theta_hat
    else:
        params = source
        if window is None:
            raise ValidationError("window required when selecting from fixed parameters")
    cells, V, n_failed = replicate_v(params, config, c_grid, r_grid, nsim, seed, window,
                                     resolution, method, workers)
    area = window.area()
    logdet = np.full((len(c_grid), len(r_grid)), np.nan)
    det = np.full_like(logdet, np.nan)
    failed = []
    for n, cell in enumerate(cells):
        a, k = divmod(n, len(r_grid))
        try:
            _, _, d, ld = sigma_hat(cell.B, s_from_v(V[:, n, :]), area)
            det[a, k], logdet[a, k] = d, ld
        except SingularB as exc:
            failed.append({"c": cell.c, "R": cell.R, "error": str(exc)})
    if not np.any(np.isfinite(logdet)):
        raise SingularB("no grid cell produced a usable covariance estimate")
    # c-major scan with strict improvement: ties go to smaller c, then smaller R
    best = None
    for a in range(len(c_grid)):
        for k in range(len(r_grid)):
            if np.isfinite(logdet[a, k]) and (best is None or logdet[a, k] < logdet[best]):
                best = (a, k)
    return SelectionResult(c_grid, r_grid, logdet, det, c_grid[best[0]], r_grid[best[1]],
                           params, len(V), n_failed, failed, time.perf_counter() - t0)
