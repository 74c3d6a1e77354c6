"""Adaptive sequential sampling criteria.

Stage one inserts points on a single axis where the response jumps the
most; stage two picks plane points that maximize the determinant of the
prior covariance of the augmented design.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import kernels
from .core import DUPLICATE_TOL

REL_FLOOR = 1e-8


@dataclass
class SortedAxisSamples:
    values: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.responses = np.asarray(self.responses, dtype=float).ravel()
        if self.values.size != self.responses.size:
            raise ValueError("values and responses differ in length")
        if np.any(np.diff(self.values) <= 0):
            raise ValueError("axis values must be strictly increasing")

    @classmethod
    def from_unsorted(cls, values, responses) -> "SortedAxisSamples":
        values = np.asarray(values, dtype=float)
        order = np.argsort(values, kind="stable")
        return cls(values[order], np.asarray(responses, dtype=float)[order])

    def insert(self, value: float, response: float) -> "SortedAxisSamples":
        return SortedAxisSamples.from_unsorted(np.append(self.values, value),
                                               np.append(self.responses, response))


def proportional_insert(axis: SortedAxisSamples, C: float) -> float:
    """New coordinate at the ``C : (1 - C)`` split of the largest-jump interval.

    The returned point is ``C * left + (1 - C) * right``; ties go to the
    leftmost interval.
    """
    if axis.values.size < 2:
        raise ValueError("need at least two axis samples")
    if not 0.0 < C < 1.0:
        raise ValueError("scale coefficient C must lie in (0, 1)")
    jumps = np.abs(np.diff(axis.responses))
    k = int(np.argmax(jumps))
    return C * axis.values[k] + (1.0 - C) * axis.values[k + 1]


def relative_error(f_true: float, f_hat: float, floor: float = REL_FLOOR) -> float:
    return abs(f_hat - f_true) / max(abs(f_true), floor)


def converged(f_true: float, f_hat: float, epsilon: float, floor: float = REL_FLOOR) -> bool:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return relative_error(f_true, f_hat, floor) <= epsilon


@dataclass
class EntropyCandidateGrid:
    """Cell rectangles ``(x0, x1, y0, y1)`` and their center points."""

    rectangles: np.ndarray
    candidates: np.ndarray

    def __len__(self) -> int:
        return self.candidates.shape[0]


def build_candidate_grid(values_i, values_j) -> EntropyCandidateGrid:
    """Cells of the tensor grid spanned by consecutive axis values."""
    vi = np.unique(np.asarray(values_i, dtype=float))
    vj = np.unique(np.asarray(values_j, dtype=float))
    if vi.size < 2 or vj.size < 2:
        raise ValueError("each axis needs at least two distinct values")
    # i varies fastest, matching a row-by-row sweep of the plane
    x0, y0 = np.meshgrid(vi[:-1], vj[:-1])
    x1, y1 = np.meshgrid(vi[1:], vj[1:])
    rects = np.column_stack([x0.ravel(), x1.ravel(), y0.ravel(), y1.ravel()])
    cands = np.column_stack([0.5 * (rects[:, 0] + rects[:, 1]),
                             0.5 * (rects[:, 2] + rects[:, 3])])
    return EntropyCandidateGrid(rects, cands)


def admissible(existing: np.ndarray, candidates: np.ndarray, tol: float = DUPLICATE_TOL) -> np.ndarray:
    """Mask of candidates farther than ``tol`` from every existing point."""
    if existing.shape[0] == 0:
        return np.ones(candidates.shape[0], dtype=bool)
    d = np.sqrt(((candidates[:, None, :] - existing[None, :, :]) ** 2).sum(-1))
    return d.min(axis=1) > tol


def entropy_gain(existing: np.ndarray, candidates: np.ndarray, theta, nugget: float = 1e-10,
                 L: np.ndarray | None = None) -> np.ndarray:
    """Bordered-determinant ratio ``det_{N+1} / (det_N sigma2) = 1 - r^T R^-1 r``."""
    existing = np.atleast_2d(np.asarray(existing, dtype=float))
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    theta = np.asarray(theta, dtype=float)
    if L is None:
        R = kernels.gauss_corr(existing, existing, theta)
        n = R.shape[0]
        while True:
            try:
                L = linalg.cholesky(R + nugget * np.eye(n), lower=True, check_finite=False)
                break
            except linalg.LinAlgError:
                nugget *= 10.0
                if nugget > 1e-4:
                    raise
    return kernels.entropy_scores(L, existing, candidates, theta)


def max_entropy_index(existing, candidates, theta, sigma2: float = 1.0) -> int:
    """Index of the candidate maximizing the augmented covariance determinant.

    Candidates within the duplicate tolerance of an existing point are
    skipped; ties resolve to the smallest index.  ``sigma2`` scales every
    determinant equally and so never changes the choice, but it must be
    positive.
    """
    existing = np.atleast_2d(np.asarray(existing, dtype=float))
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] == 0:
        raise ValueError("no candidates")
    if existing.shape[0] < 1:
        raise ValueError("need at least one existing point")
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    ok = admissible(existing, candidates)
    if not ok.any():
        raise ValueError("every candidate coincides with an existing point")
    scores = sigma2 * entropy_gain(existing, candidates, theta)
    scores = np.where(ok, scores, -np.inf)
    return int(np.argmax(scores))


def max_entropy_select(existing, candidates, theta, sigma2: float = 1.0) -> np.ndarray:
    """The candidate point chosen by :func:`max_entropy_index`."""
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    return candidates[max_entropy_index(existing, candidates, theta, sigma2)].copy()
