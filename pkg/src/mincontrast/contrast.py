"""Minimum-contrast objective: Riemann sum of squared powered discrepancies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, NegativeBase, ValidationError
from .kfunc import CORRECTIONS, DistanceGrid

FAMILIES = ("K", "Q")
_FAMILY_ALIASES = {"K": "K", "original-K": "K", "Q": "Q", "adjusted-Q": "Q"}
# anything below this (relative to the curve scale) is floating-point dust
_NEG_TOL = 1e-12


def power_matrix(c, m: int = 2) -> np.ndarray:
    """Scalar ``c`` -> ``c * ones((m, m))``; arrays are validated as given."""
    arr = np.asarray(c, dtype=float)
    if arr.ndim == 0:
        arr = np.full((m, m), float(arr))
    if arr.shape != (m, m):
        raise ValidationError(f"power matrix must be {m}x{m}, got shape {arr.shape}")
    if not np.all(arr > 0):
        raise ValidationError("power matrix entries must be > 0")
    if not np.array_equal(arr, arr.T):
        raise ValidationError("power matrix must be symmetric")
    return arr


@dataclass(frozen=True, eq=False)
class ContrastConfig:
    c: object = 0.2
    R: float = 2.5
    n0: int = 512
    family: str = "K"
    correction: str = "isotropic"
    symmetrize: bool = False
    weight: str = "constant-one"
    m: int = 2
    power: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "power", power_matrix(self.c, self.m))
        fam = _FAMILY_ALIASES.get(self.family)
        if fam is None:
            raise ValidationError(f"family must be one of {sorted(_FAMILY_ALIASES)}, got {self.family!r}")
        object.__setattr__(self, "family", fam)
        if self.correction not in CORRECTIONS:
            raise ValidationError(f"correction must be one of {CORRECTIONS}, got {self.correction!r}")
        if self.weight != "constant-one":
            raise ValidationError("only the constant-one weight is implemented")
        DistanceGrid(self.R, self.n0)

    @property
    def grid(self) -> DistanceGrid:
        return DistanceGrid(float(self.R), int(self.n0))

    def with_cr(self, c, R) -> "ContrastConfig":
        return ContrastConfig(c=c, R=R, n0=self.n0, family=self.family, correction=self.correction,
                              symmetrize=self.symmetrize, weight=self.weight, m=self.m)

    def to_dict(self) -> dict:
        c = self.c if np.ndim(self.c) == 0 else np.asarray(self.c).tolist()
        return {"c": float(c) if np.ndim(c) == 0 else c, "R": float(self.R), "n0": int(self.n0),
                "family": self.family, "correction": self.correction,
                "symmetrize": bool(self.symmetrize)}

    @classmethod
    def from_dict(cls, d: dict) -> "ContrastConfig":
        known = {"c", "R", "n0", "family", "correction", "symmetrize"}
        kw = {k: d[k] for k in known if k in d}
        if "n0" in kw:
            kw["n0"] = int(kw["n0"])
        if "R" in kw:
            kw["R"] = float(kw["R"])
        return cls(**kw)


def powered(values: np.ndarray, power: np.ndarray) -> np.ndarray:
    """Entrywise ``values[i, j, k] ** power[i, j]``, clamping dust below zero."""
    values = np.asarray(values, dtype=float)
    scale = max(float(np.max(np.abs(values), initial=0.0)), 1.0)
    if np.any(values < -_NEG_TOL * scale):
        raise NegativeBase("negative curve value cannot be raised to a fractional power")
    return np.maximum(values, 0.0) ** power[:, :, None]


def contrast_values(model: np.ndarray, empirical: np.ndarray, power: np.ndarray) -> float:
    """``sum_ij sum_k (M_ij(h_k)^c_ij - E_ij(h_k)^c_ij)^2`` with unit weight."""
    if model.shape != empirical.shape:
        raise ValidationError(f"curve shapes differ: {model.shape} vs {empirical.shape}")
    diff = powered(model, power) - powered(empirical, power)
    return float(np.sum(diff * diff))


def contrast(model_curves, empirical, config: ContrastConfig) -> float:
    """Contrast between a model curve set and an empirical ``KCurveMatrix``."""
    grid = config.grid
    empirical.check_grid(grid)
    if model_curves.grid != grid:
        raise GridMismatch(f"model curves tabulated on {model_curves.grid}, expected {grid}")
    return contrast_values(model_curves.K, empirical.values, config.power)


def trace_form(A: np.ndarray, B: np.ndarray, power: np.ndarray) -> float:
    """``Tr((A^C - B^C)(A^C - B^C)^T)`` for m x m matrices."""
    D = np.asarray(A, float) ** power - np.asarray(B, float) ** power
    return float(np.trace(D @ D.T))


def trace_form_check(model: np.ndarray, empirical: np.ndarray, power: np.ndarray) -> float:
    """Contrast accumulated node by node through the trace form."""
    return float(sum(trace_form(model[:, :, k], empirical[:, :, k], power)
                     for k in range(model.shape[2])))
