"""Universal Kriging with a Gaussian correlation and a Legendre trend."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize
from scipy.spatial.distance import cdist
from scipy.stats import qmc

from .. import kernels
from ..core import DesignSpace
from .pce import legendre_design, to_unit

NUGGET_START = 1e-10
NUGGET_MAX = 1e-4
THETA_BOUNDS = (1e-3, 1e3)
STARTS_PER_DIM = 10


class SingularCorrelation(np.linalg.LinAlgError):
    pass


def _scale01(X, lower, upper) -> np.ndarray:
    return (np.asarray(X, dtype=float) - lower) / (upper - lower)


def _cholesky_escalating(R: np.ndarray, nugget: float = NUGGET_START):
    """Cholesky of ``R + nugget*I``, growing the nugget tenfold on failure."""
    n = R.shape[0]
    while nugget <= NUGGET_MAX * (1 + 1e-9):
        try:
            L = linalg.cholesky(R + nugget * np.eye(n), lower=True, check_finite=False)
            if np.all(np.diag(L) > 0):
                return L, nugget
        except linalg.LinAlgError:
            pass
        nugget *= 10.0
    raise SingularCorrelation("correlation matrix singular after maximum nugget escalation")


def profile_loglik(Xs, y, F, theta):
    """Concentrated log-likelihood at ``theta`` with nugget escalation.

    Returns ``(objective, nugget)``; objective is ``-inf`` when no admissible
    nugget makes the correlation matrix factorizable.
    """
    nugget = NUGGET_START
    while nugget <= NUGGET_MAX * (1 + 1e-9):
        obj, _ = kernels.concentrated_loglik(Xs, y, F, theta, nugget)
        if np.isfinite(obj):
            return obj, nugget
        nugget *= 10.0
    return -np.inf, np.nan


@dataclass
class KrigingModel:
    """Fitted Kriging predictor.

    ``theta`` acts on inputs rescaled to the unit box; the trend is the
    orthonormal Legendre family on inputs rescaled to ``[-1, 1]``.
    """

    lower: np.ndarray
    upper: np.ndarray
    X: np.ndarray
    y: np.ndarray
    trend_indices: np.ndarray
    theta: np.ndarray
    beta: np.ndarray
    sigma2: float
    nugget: float
    loglik: float = np.nan
    _L: np.ndarray = field(default=None, repr=False)
    _alpha: np.ndarray = field(default=None, repr=False)
    _Ft: np.ndarray = field(default=None, repr=False)
    _Ginv: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        Xs = self.scaled(self.X)
        R = kernels.gauss_corr(Xs, Xs, self.theta)
        R[np.diag_indices_from(R)] += self.nugget
        self._L = linalg.cholesky(R, lower=True, check_finite=False)
        F = self.trend(self.X)
        resid = self.y - F @ self.beta
        self._alpha = linalg.cho_solve((self._L, True), resid, check_finite=False)
        self._Ft = linalg.solve_triangular(self._L, F, lower=True, check_finite=False)
        self._Ginv = np.linalg.pinv(self._Ft.T @ self._Ft)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def correlation_factor(self) -> np.ndarray:
        """Lower Cholesky factor of the (nugget-inflated) correlation matrix."""
        return self._L

    def scaled(self, X) -> np.ndarray:
        return _scale01(np.atleast_2d(X), self.lower, self.upper)

    def trend(self, X) -> np.ndarray:
        return legendre_design(to_unit(np.atleast_2d(X), self.lower, self.upper),
                               self.trend_indices)

    def predict(self, X, return_var: bool = False):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} inputs, got {X.shape[1]}")
        Xs = self.scaled(self.X)
        Zs = self.scaled(X)
        r = kernels.gauss_corr(Xs, Zs, self.theta)
        # the nugget is jitter on the process itself, so a prediction point that
        # coincides with a training point shares it; this keeps exact interpolation
        r[cdist(Xs, Zs, "chebyshev") <= 1e-15] += self.nugget
        Fx = self.trend(X)
        mean = Fx @ self.beta + r.T @ self._alpha
        if not return_var:
            return mean
        z = linalg.solve_triangular(self._L, r, lower=True, check_finite=False)
        u = self._Ft.T @ z - Fx.T
        extra = np.einsum("ij,ik,kj->j", u, self._Ginv, u)
        var = self.sigma2 * (1.0 - np.einsum("ij,ij->j", z, z) + extra)
        # round-off below zero is clamped; anything larger signals a broken factorization
        if np.any(var < -(1e-10 + 1e-6 * self.sigma2 * (1.0 + extra))):
            raise ArithmeticError("Kriging variance significantly negative")
        return mean, np.maximum(var, 0.0)

    def loo_residuals(self) -> np.ndarray:
        """Closed-form leave-one-out residuals at fixed hyperparameters."""
        Rinv = linalg.cho_solve((self._L, True), np.eye(self.y.size), check_finite=False)
        F = self.trend(self.X)
        RiF = Rinv @ F
        Q = Rinv - RiF @ np.linalg.pinv(F.T @ RiF) @ RiF.T
        dq = np.diag(Q)
        with np.errstate(divide="ignore", invalid="ignore"):
            e = (Q @ self.y) / dq
        return np.where(dq > 1e-14 * np.abs(Q).max(), e, np.inf)

    def to_dict(self) -> dict:
        return {
            "type": "kriging",
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "trend_indices": self.trend_indices.tolist(),
            "theta": self.theta.tolist(),
            "beta": self.beta.tolist(),
            "sigma2": self.sigma2,
            "nugget": self.nugget,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KrigingModel":
        lower = np.asarray(d["lower"], dtype=float)
        return cls(
            lower=lower,
            upper=np.asarray(d["upper"], dtype=float),
            X=np.asarray(d["X"], dtype=float).reshape(-1, lower.size),
            y=np.asarray(d["y"], dtype=float),
            trend_indices=np.asarray(d["trend_indices"], dtype=int).reshape(-1, lower.size),
            theta=np.asarray(d["theta"], dtype=float),
            beta=np.asarray(d["beta"], dtype=float),
            sigma2=float(d["sigma2"]),
            nugget=float(d["nugget"]),
        )


def theta_starts(dim: int, bounds=THETA_BOUNDS, per_dim: int = STARTS_PER_DIM) -> np.ndarray:
    """Deterministic log-uniform multi-start points, ``per_dim * dim`` of them."""
    lo, hi = np.log10(bounds[0]), np.log10(bounds[1])
    if dim == 1:
        u = (np.arange(per_dim) + 0.5) / per_dim
        return 10 ** (lo + (hi - lo) * u[:, None])
    u = qmc.Halton(dim, scramble=False).random(per_dim * dim + 1)[1:]
    return 10 ** (lo + (hi - lo) * u)


def fit_kriging(X, y, space: DesignSpace, trend_indices=None,
                theta_bounds=THETA_BOUNDS, starts_per_dim: int = STARTS_PER_DIM,
                max_refine_evals: int | None = None) -> KrigingModel:
    """Maximum-likelihood Kriging fit.

    ``theta`` is chosen by scoring a log-uniform multi-start grid and
    refining the best start with a bounded derivative-free search in
    ``log10(theta)``.  ``beta`` and ``sigma2`` are the GLS estimates.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if d != space.dim:
        raise ValueError("data dimension does not match the design space")
    if n < 2:
        raise ValueError("Kriging fit needs at least two points")
    if np.ptp(X, axis=0).max() == 0.0:
        raise ValueError("degenerate data: all points identical")
    if trend_indices is None:
        trend_indices = np.zeros((1, d), dtype=int)
    trend_indices = np.asarray(trend_indices, dtype=int).reshape(-1, d)
    if trend_indices.shape[0] > n:
        raise ValueError("more trend functions than data points")

    lo, hi = space.lower, space.upper
    Xs = _scale01(X, lo, hi)
    F = legendre_design(to_unit(X, lo, hi), trend_indices)

    log_lo, log_hi = np.log10(theta_bounds[0]), np.log10(theta_bounds[1])
    cache = {}

    def objective(logt):
        key = tuple(np.round(logt, 12))
        if key not in cache:
            cache[key] = profile_loglik(Xs, y, F, 10 ** np.asarray(logt))
        return cache[key][0]

    starts = np.log10(theta_starts(d, theta_bounds, starts_per_dim))
    scores = np.array([objective(s) for s in starts])
    if not np.any(np.isfinite(scores)):
        raise SingularCorrelation("no multi-start point gives a factorizable correlation matrix")
    best = int(np.argmax(scores))
    best_logt, best_obj = starts[best].copy(), scores[best]

    def neg(logt):
        v = objective(np.clip(logt, log_lo, log_hi))
        return 1e300 if not np.isfinite(v) else -v

    if d == 1:
        step = (log_hi - log_lo) / starts_per_dim
        a = max(log_lo, best_logt[0] - step)
        b = min(log_hi, best_logt[0] + step)
        res = optimize.minimize_scalar(lambda t: neg([t]), bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-4})
        cand = np.array([res.x])
    else:
        res = optimize.minimize(neg, best_logt, method="Powell",
                                bounds=[(log_lo, log_hi)] * d,
                                options={"xtol": 1e-3, "ftol": 1e-8,
                                         "maxfev": max_refine_evals or 60 * d})
        cand = np.clip(res.x, log_lo, log_hi)
    cand_obj = objective(cand)
    if cand_obj > best_obj:
        best_logt, best_obj = cand, cand_obj

    theta = 10 ** best_logt
    _, nugget = profile_loglik(Xs, y, F, theta)
    return _assemble(X, y, lo, hi, trend_indices, theta, nugget, best_obj)


def _assemble(X, y, lo, hi, trend_indices, theta, nugget, loglik) -> KrigingModel:
    Xs = _scale01(X, lo, hi)
    R = kernels.gauss_corr(Xs, Xs, theta)
    L, nugget = _cholesky_escalating(R, nugget)
    F = legendre_design(to_unit(X, lo, hi), trend_indices)
    Ft = linalg.solve_triangular(L, F, lower=True, check_finite=False)
    yt = linalg.solve_triangular(L, y, lower=True, check_finite=False)
    beta, *_ = np.linalg.lstsq(Ft, yt, rcond=1e-12)
    resid = yt - Ft @ beta
    sigma2 = float(resid @ resid / y.size)
    return KrigingModel(lower=lo.copy(), upper=hi.copy(), X=X.copy(), y=y.copy(),
                        trend_indices=trend_indices, theta=np.asarray(theta, dtype=float),
                        beta=beta, sigma2=sigma2, nugget=nugget, loglik=float(loglik))


def predict_kriging(m: KrigingModel, x):
    """Mean and variance at a single point."""
    mean, var = m.predict(np.atleast_2d(x), return_var=True)
    return float(mean[0]), float(var[0])
