# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Gaussian correlation, profile likelihood, entropy scores.

Same contracts as ``_kernels_py``.  Cholesky goes through LAPACK ``dpotrf``;
triangular solves and the Gram-Schmidt projection are plain loops, which
beat the numpy call overhead at the matrix sizes a component fit sees.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, INFINITY, NAN
from scipy.linalg.cython_lapack cimport dpotrf
from scipy.linalg.cython_blas cimport dtrsm

cnp.import_array()

cdef double DROP_TOL = 1e-10
cdef double SIGMA2_FLOOR = 1e-300


cdef void _corr(const double[:, ::1] A, const double[:, ::1] B,
                const double[::1] theta, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, diff
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                diff = A[i, k] - B[j, k]
                s += theta[k] * diff * diff
            out[i, j] = exp(-s)


def gauss_corr(A, B, theta):
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    out = np.empty((a.shape[0], b.shape[0]))
    cdef double[:, ::1] o = out
    _corr(a, b, th, o)
    return out


cdef int _cholesky_lower(double[:, ::1] R) noexcept nogil:
    # C-order lower factor == Fortran-order upper factor of the same symmetric matrix
    cdef char uplo = b'U'
    cdef int n = <int>R.shape[0]
    cdef int info = 0
    dpotrf(&uplo, &n, &R[0, 0], &n, &info)
    cdef Py_ssize_t i, j
    if info == 0:
        for i in range(n):
            for j in range(i + 1, n):
                R[i, j] = 0.0
    return info


cdef void _forward(const double[:, ::1] L, double[:, ::1] B) noexcept nogil:
    # in-place L z = B, column by column
    cdef Py_ssize_t n = L.shape[0], m = B.shape[1]
    cdef Py_ssize_t i, k, c
    cdef double s
    for c in range(m):
        for i in range(n):
            s = B[i, c]
            for k in range(i):
                s -= L[i, k] * B[k, c]
            B[i, c] = s / L[i, i]


cdef void _project_out(double[:, ::1] Q, Py_ssize_t nq, double[::1] v) noexcept nogil:
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t p, j, i
    cdef double dot
    for p in range(2):
        for j in range(nq):
            dot = 0.0
            for i in range(n):
                dot += Q[j, i] * v[i]
            for i in range(n):
                v[i] -= dot * Q[j, i]


cdef double _gls_rss(double[:, ::1] FtT, double[::1] yt, double[:, ::1] Q) noexcept nogil:
    # FtT holds the whitened trend columns as rows
    cdef Py_ssize_t q = FtT.shape[0], n = FtT.shape[1]
    cdef Py_ssize_t k, i, nq = 0
    cdef double nrm0, nrm, rss = 0.0
    for k in range(q):
        nrm0 = 0.0
        for i in range(n):
            nrm0 += FtT[k, i] * FtT[k, i]
        nrm0 = sqrt(nrm0)
        if nrm0 == 0.0:
            continue
        _project_out(Q, nq, FtT[k])
        nrm = 0.0
        for i in range(n):
            nrm += FtT[k, i] * FtT[k, i]
        nrm = sqrt(nrm)
        if nrm > DROP_TOL * nrm0:
            for i in range(n):
                Q[nq, i] = FtT[k, i] / nrm
            nq += 1
    _project_out(Q, nq, yt)
    for i in range(n):
        rss += yt[i] * yt[i]
    return rss


def concentrated_loglik(X, y, F, theta, double nugget):
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    Fa = np.asarray(F, dtype=np.float64)
    if Fa.ndim == 1:
        Fa = Fa[:, None]
    cdef Py_ssize_t q = Fa.shape[1]
    R_arr = np.empty((n, n))
    cdef double[:, ::1] R = R_arr
    # trend columns and response packed as one right-hand-side block
    rhs_arr = np.empty((n, q + 1))
    rhs_arr[:, :q] = Fa
    rhs_arr[:, q] = np.asarray(y, dtype=np.float64)
    cdef double[:, ::1] rhs = rhs_arr
    FtT_arr = np.empty((q, n))
    cdef double[:, ::1] FtT = FtT_arr
    yt_arr = np.empty(n)
    cdef double[::1] yt = yt_arr
    Q_arr = np.empty((max(q, 1), n))
    cdef double[:, ::1] Q = Q_arr
    cdef Py_ssize_t i, k
    cdef double logdet = 0.0, rss, sigma2
    cdef int info
    with nogil:
        _corr(x, x, th, R)
        for i in range(n):
            R[i, i] += nugget
        info = _cholesky_lower(R)
    if info != 0:
        return -INFINITY, NAN
    with nogil:
        for i in range(n):
            if not (R[i, i] > 0.0):
                info = 1
                break
            logdet += 2.0 * log(R[i, i])
    if info != 0:
        return -INFINITY, NAN
    with nogil:
        _forward(R, rhs)
        for i in range(n):
            for k in range(q):
                FtT[k, i] = rhs[i, k]
            yt[i] = rhs[i, q]
        rss = _gls_rss(FtT, yt, Q)
    sigma2 = rss / n
    if sigma2 < SIGMA2_FLOOR:
        sigma2 = SIGMA2_FLOOR
    return -0.5 * (n * log(sigma2) + logdet), sigma2


def entropy_scores(L, X, C, theta):
    cdef double[:, ::1] l = np.ascontiguousarray(L, dtype=np.float64)
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], m = c.shape[0]
    out = np.empty(m)
    if m == 0:
        return out
    r_arr = np.empty((n, m))
    cdef double[:, ::1] r = r_arr
    cdef double[::1] o = out
    cdef Py_ssize_t i, j
    cdef double s
    # row-major (n, m) is column-major (m, n): solving L z = r is z^T L^T = r^T
    cdef char side = b'R', uplo = b'U', trans = b'N', diag = b'N'
    cdef int im = <int>m, jn = <int>n
    cdef double one = 1.0
    with nogil:
        _corr(x, c, th, r)
        dtrsm(&side, &uplo, &trans, &diag, &im, &jn, &one, &l[0, 0], &jn, &r[0, 0], &im)
        for j in range(m):
            s = 0.0
            for i in range(n):
                s += r[i, j] * r[i, j]
            o[j] = 1.0 - s
    return out
