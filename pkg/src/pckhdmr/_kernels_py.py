"""Pure numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` operation for operation; used when the compiled
extension is unavailable or ``PCKHDMR_PURE_PYTHON`` is set.
"""
import numpy as np
from scipy import linalg

DROP_TOL = 1e-10
SIGMA2_FLOOR = 1e-300


def gauss_corr(A, B, theta):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    theta = np.asarray(theta, dtype=float)
    d2 = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = A[:, k, None] - B[None, :, k]
        d2 += theta[k] * diff * diff
    return np.exp(-d2)


def _project_out(Q, v):
    # two passes of modified Gram-Schmidt
    for _ in range(2):
        for q in Q:
            v = v - (q @ v) * q
    return v


def gls_residual(Ft, yt):
    """Residual of ``yt`` after projecting out the column span of ``Ft``.

    Columns whose orthogonalized norm falls below ``DROP_TOL`` times their
    original norm are treated as dependent and skipped.
    """
    Q = []
    for k in range(Ft.shape[1]):
        col = Ft[:, k]
        nrm0 = np.sqrt(col @ col)
        if nrm0 == 0.0:
            continue
        v = _project_out(Q, col.copy())
        nrm = np.sqrt(v @ v)
        if nrm > DROP_TOL * nrm0:
            Q.append(v / nrm)
    return _project_out(Q, yt.copy())


def concentrated_loglik(X, y, F, theta, nugget):
    """Profile log-likelihood ``-(N ln sigma2 + ln|R|)/2`` and ``sigma2``.

    Returns ``(-inf, nan)`` when the correlation matrix is not positive
    definite at this nugget.
    """
    n = X.shape[0]
    R = gauss_corr(X, X, theta)
    R[np.diag_indices(n)] += nugget
    try:
        L = linalg.cholesky(R, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return -np.inf, np.nan
    diag = np.diag(L)
    if not np.all(diag > 0) or not np.all(np.isfinite(diag)):
        return -np.inf, np.nan
    Ft = linalg.solve_triangular(L, F, lower=True, check_finite=False)
    yt = linalg.solve_triangular(L, y, lower=True, check_finite=False)
    r = gls_residual(np.atleast_2d(Ft.T).T, yt)
    sigma2 = max((r @ r) / n, SIGMA2_FLOOR)
    logdet = 2.0 * np.log(diag).sum()
    return -0.5 * (n * np.log(sigma2) + logdet), sigma2


def entropy_scores(L, X, C, theta):
    """``1 - r^T R^{-1} r`` for each candidate row of ``C``."""
    if C.shape[0] == 0:
        return np.empty(0)
    r = gauss_corr(X, C, theta)
    z = linalg.solve_triangular(L, r, lower=True, check_finite=False)
    return 1.0 - np.einsum("ij,ij->j", z, z)
