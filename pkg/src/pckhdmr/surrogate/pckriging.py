"""PC-Kriging: Kriging whose trend is a LARS-selected sparse PCE basis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DesignSpace
from .kriging import THETA_BOUNDS, KrigingModel, fit_kriging
from .pce import PceBasis, fit_pce

MODES = ("SPC", "OPC")


@dataclass
class PcKrigingModel:
    pce_trend: PceBasis
    kriging: KrigingModel
    mode: str = "SPC"

    @property
    def dim(self) -> int:
        return self.kriging.dim

    @property
    def theta(self) -> np.ndarray:
        return self.kriging.theta

    @property
    def sigma2(self) -> float:
        return self.kriging.sigma2

    def predict(self, X, return_var: bool = False):
        return self.kriging.predict(X, return_var=return_var)

    def loo_residuals(self) -> np.ndarray:
        return self.kriging.loo_residuals()

    def to_dict(self) -> dict:
        return {"type": "pc-kriging", "mode": self.mode,
                "pce_trend": self.pce_trend.to_dict(),
                "kriging": self.kriging.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PcKrigingModel":
        return cls(pce_trend=PceBasis.from_dict(d["pce_trend"]),
                   kriging=KrigingModel.from_dict(d["kriging"]), mode=d["mode"])


def _loo_mse(m: KrigingModel) -> float:
    e = m.loo_residuals()
    return float(np.mean(e**2)) if np.all(np.isfinite(e)) else np.inf


def fit_pc_kriging(X, y, space: DesignSpace, mode: str = "SPC", max_degree: int = 5,
                   theta_bounds=THETA_BOUNDS) -> PcKrigingModel:
    """Sequential (SPC) or optimal (OPC) PC-Kriging.

    SPC plugs the whole LARS-selected basis into the Kriging trend.  OPC fits
    one Kriging per nested prefix of the LARS order and keeps the prefix with
    the smallest leave-one-out error.
    """
    mode = mode.upper()
    if mode not in MODES:
        raise ValueError(f"unknown PC-Kriging mode {mode!r}")
    pce = fit_pce(X, y, space, max_degree)
    if mode == "SPC":
        km = fit_kriging(X, y, space, pce.multi_indices, theta_bounds)
        return PcKrigingModel(pce, km, "SPC")

    best = None
    for k in range(1, pce.multi_indices.shape[0] + 1):
        km = fit_kriging(X, y, space, pce.multi_indices[:k], theta_bounds)
        err = _loo_mse(km)
        if best is None or err <= best[0]:
            best = (err, k, km)
    _, k, km = best
    trend = PceBasis(lower=pce.lower, upper=pce.upper, multi_indices=pce.multi_indices[:k],
                     coefficients=km.beta.copy(), max_degree=pce.max_degree,
                     loo_error=pce.loo_error)
    return PcKrigingModel(trend, km, "OPC")


def predict_pc_kriging(m: PcKrigingModel, x):
    mean, var = m.predict(np.atleast_2d(x), return_var=True)
    return float(mean[0]), float(var[0])
