"""Accuracy indices on an independent validation set."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .core import DesignSpace, Distribution, sample_joint

DEFAULT_VALIDATION = 2000


def _pair(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred differ in length")
    if y_true.size < 2:
        raise ValueError("need at least two validation points")
    return y_true, y_pred


def std(y_true) -> float:
    """Sample standard deviation with the ``s - 1`` divisor."""
    return float(np.std(np.asarray(y_true, dtype=float), ddof=1))


def _std_nonzero(y_true) -> float:
    s = std(y_true)
    if s == 0.0:
        raise ZeroDivisionError("validation responses have zero standard deviation")
    return s


def r_squared(y_true, y_pred) -> float:
    y_true, y_pred = _pair(y_true, y_pred)
    ss_tot = np.sum((y_true - y_true.mean()) ** 2)
    if ss_tot == 0.0:
        raise ZeroDivisionError("validation responses have zero variance")
    return float(1.0 - np.sum((y_true - y_pred) ** 2) / ss_tot)


def raae(y_true, y_pred) -> float:
    y_true, y_pred = _pair(y_true, y_pred)
    return float(np.sum(np.abs(y_true - y_pred)) / (y_true.size * _std_nonzero(y_true)))


def rmae(y_true, y_pred) -> float:
    y_true, y_pred = _pair(y_true, y_pred)
    return float(np.max(np.abs(y_true - y_pred)) / _std_nonzero(y_true))


@dataclass
class MetricReport:
    r2: float
    raae: float
    rmae: float
    n_validation: int
    std: float

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "MetricReport":
        y_true, y_pred = _pair(y_true, y_pred)
        return cls(r_squared(y_true, y_pred), raae(y_true, y_pred), rmae(y_true, y_pred),
                   y_true.size, std(y_true))

    def to_dict(self) -> dict:
        return asdict(self)


def validation_points(space: DesignSpace, n: int, stream: np.random.Generator,
                      dists: list[Distribution] | None = None) -> np.ndarray:
    """Uniform draws in the box, or clipped draws from ``dists`` when given."""
    if dists is None:
        return space.uniform(stream, n)
    return sample_joint(dists, stream, n, space)


def evaluate_model(model: Callable, f: Callable, space: DesignSpace,
                   n: int = DEFAULT_VALIDATION, stream: np.random.Generator | None = None,
                   dists: list[Distribution] | None = None) -> MetricReport:
    """Score ``model`` against ``f`` on ``n`` fresh validation points.

    ``model`` maps an ``(n, p)`` array to predictions; ``f`` is called
    point by point.  Pass an uncounted evaluator for ``f`` so validation
    never touches the modelling budget.
    """
    if n < 2:
        raise ValueError("need at least two validation points")
    if stream is None:
        stream = np.random.default_rng(0)
    X = validation_points(space, n, stream, dists)
    y_true = np.array([f(x) for x in X], dtype=float)
    y_pred = np.asarray(model(X), dtype=float).ravel()
    return MetricReport.from_predictions(y_true, y_pred)
