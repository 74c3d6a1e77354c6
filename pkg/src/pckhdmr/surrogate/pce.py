"""Sparse Legendre polynomial chaos expansions fitted by hybrid LARS.

Inputs are mapped affinely from the design box onto ``[-1, 1]`` and the
basis is the tensorized, orthonormal (uniform measure) Legendre family.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import lars_path

from ..core import DesignSpace


def total_degree_indices(dim: int, max_degree: int) -> np.ndarray:
    """All multi-indices with total degree ``<= max_degree``, graded order."""
    out = []
    for deg in range(max_degree + 1):
        for combo in itertools.product(range(deg + 1), repeat=dim):
            if sum(combo) == deg:
                out.append(combo)
    # product() yields reverse-lexicographic within a degree; flip for readability
    out.sort(key=lambda a: (sum(a), tuple(-v for v in a)))
    return np.array(out, dtype=int).reshape(-1, dim)


def to_unit(X, lower, upper) -> np.ndarray:
    return 2.0 * (np.asarray(X, dtype=float) - lower) / (upper - lower) - 1.0


def legendre_design(U: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Orthonormal Legendre basis evaluated at rows of ``U`` (already in [-1, 1])."""
    U = np.atleast_2d(U)
    indices = np.asarray(indices, dtype=int).reshape(-1, U.shape[1])
    if indices.shape[0] == 0:
        return np.empty((U.shape[0], 0))
    deg = int(indices.max(initial=0))
    norms = np.sqrt(2.0 * np.arange(deg + 1) + 1.0)
    Psi = np.ones((U.shape[0], indices.shape[0]))
    for k in range(U.shape[1]):
        V = legendre.legvander(U[:, k], deg) * norms
        Psi *= V[:, indices[:, k]]
    return Psi


def loo_ols(Psi: np.ndarray, y: np.ndarray):
    """OLS coefficients and leave-one-out residuals via the hat-matrix shortcut.

    Returns ``(coef, loo, tr)`` with ``tr = trace((Psi^T Psi)^-1)``, or ``None``
    if the design is rank deficient or some point has unit leverage.
    """
    n, q = Psi.shape
    if q >= n:
        return None
    Q, R = np.linalg.qr(Psi)
    d = np.abs(np.diag(R))
    if d.size and d.min() <= 1e-10 * d.max():
        return None
    coef = np.linalg.solve(R, Q.T @ y)
    h = np.einsum("ij,ij->i", Q, Q)
    if np.any(h >= 1.0 - 1e-12):
        return None
    resid = y - Psi @ coef
    Rinv = np.linalg.solve(R, np.eye(q))
    return coef, resid / (1.0 - h), float(np.sum(Rinv**2))


@dataclass
class PceBasis:
    """Fitted sparse expansion.

    ``multi_indices`` is kept in selection order (constant first), which
    PC-Kriging's optimal-trend search relies on.
    """

    lower: np.ndarray
    upper: np.ndarray
    multi_indices: np.ndarray
    coefficients: np.ndarray
    max_degree: int
    loo_error: float = np.nan

    family = "legendre"

    @property
    def dim(self) -> int:
        return self.lower.size

    def basis(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} inputs, got {X.shape[1]}")
        return legendre_design(to_unit(X, self.lower, self.upper), self.multi_indices)

    def predict(self, X) -> np.ndarray:
        if self.coefficients.size == 0:
            return np.zeros(np.atleast_2d(X).shape[0])
        return self.basis(X) @ self.coefficients

    def extrapolating(self, X) -> np.ndarray:
        """Row mask of points outside the fitting box."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.any((X < self.lower) | (X > self.upper), axis=1)

    def to_dict(self) -> dict:
        return {
            "type": "pce",
            "family": self.family,
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "multi_indices": self.multi_indices.tolist(),
            "coefficients": self.coefficients.tolist(),
            "max_degree": self.max_degree,
            "loo_error": None if np.isnan(self.loo_error) else self.loo_error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PceBasis":
        lower = np.asarray(d["lower"], dtype=float)
        return cls(
            lower=lower,
            upper=np.asarray(d["upper"], dtype=float),
            multi_indices=np.asarray(d["multi_indices"], dtype=int).reshape(-1, lower.size),
            coefficients=np.asarray(d["coefficients"], dtype=float),
            max_degree=int(d["max_degree"]),
            loo_error=np.nan if d.get("loo_error") is None else float(d["loo_error"]),
        )


def lars_order(Psi: np.ndarray, y: np.ndarray) -> list[int]:
    """Columns of ``Psi`` (constant column 0 excluded) in LARS entry order."""
    if Psi.shape[1] <= 1:
        return []
    A = Psi[:, 1:] - Psi[:, 1:].mean(axis=0)
    b = y - y.mean()
    if not np.any(b) or not np.any(A):
        return []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        _, active, _ = lars_path(A, b, method="lar", return_path=False)
    return [int(a) + 1 for a in active]


def _hybrid_lars(Psi, y, order, n):
    """Best nested prefix of ``order`` by corrected leave-one-out error."""
    var = y.var()
    scale = var if var > 0 else 1.0
    best = None
    for k in range(1, min(len(order), n - 1) + 1):
        cols = order[:k]
        fit = loo_ols(Psi[:, cols], y)
        if fit is None:
            continue
        coef, loo, _ = fit
        # small-sample correction penalizes prefixes close to interpolation
        err = float(np.mean(loo**2) / scale) * n / (n - k)
        if best is None or err < best[0]:
            best = (err, cols, coef)
    return best


def fit_pce(X, y, space: DesignSpace, max_degree: int) -> PceBasis:
    """Degree-adaptive sparse PCE.

    For each candidate total degree up to ``max_degree`` the basis is ordered
    by LARS and every nested prefix is solved by OLS; the (degree, prefix)
    pair with the smallest corrected leave-one-out error wins.  Degrees
    stop increasing after two consecutive non-improving steps.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if n < 2:
        raise ValueError("PCE fit needs at least two points")
    if max_degree < 1:
        raise ValueError("max_degree must be at least 1")
    if X.shape[1] != space.dim:
        raise ValueError("data dimension does not match the design space")
    U = to_unit(X, space.lower, space.upper)
    best = None
    worse = 0
    for deg in range(1, max_degree + 1):
        cand = total_degree_indices(space.dim, deg)
        Psi = legendre_design(U, cand)
        fit = _hybrid_lars(Psi, y, [0] + lars_order(Psi, y), n)
        if fit is None:
            continue
        if best is None or fit[0] < best[0]:
            best = (fit[0], cand[fit[1]], fit[2])
            worse = 0
        else:
            worse += 1
            if worse >= 2:
                break
    if best is None:
        raise np.linalg.LinAlgError("no resolvable polynomial subset for PCE fit")
    err, indices, coef = best
    coef = np.where(np.abs(coef) < 1e-14 * max(1.0, np.abs(y).max()), 0.0, coef)
    return PceBasis(lower=space.lower.copy(), upper=space.upper.copy(),
                    multi_indices=indices, coefficients=coef,
                    max_degree=max_degree, loo_error=err)


def predict_pce(b: PceBasis, X) -> np.ndarray:
    return b.predict(X)
