"""Minimum-contrast estimation for bivariate log-Gaussian Cox processes."""

__version__ = "0.1.0"

from .contrast import ContrastConfig, contrast  # noqa: E402
from .fitter import FitOptions, FitResult, fit, initial_theta  # noqa: E402
from .geometry import PointPattern, RectWindow, erode, intensity_estimates  # noqa: E402
from .kfunc import DistanceGrid, KCurveMatrix, k_matrix, q_hat  # noqa: E402
from .lgcp import M1, M2, M3, M4, LgcpParams, corr_at, model_k, rho  # noqa: E402
from .simulator import SimConfig, sample_lgcp, sample_poisson  # noqa: E402
