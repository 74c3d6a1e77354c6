"""Domain primitives: design spaces, cut-centers, counted black-box functions,
sample sets, input distributions and seeded random streams.

Dimension indices are 0-based throughout the package.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

DUPLICATE_TOL = 1e-12
EULER_GAMMA = 0.5772156649015329


class BudgetExhausted(RuntimeError):
    """Raised when a budgeted function is asked for more evaluations than allowed."""


@dataclass(frozen=True)
class DesignSpace:
    """Axis-aligned box ``[lower, upper]`` in ``dim`` dimensions."""

    lower: np.ndarray
    upper: np.ndarray

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        lo = np.array(lower, dtype=float).ravel()
        hi = np.array(upper, dtype=float).ravel()
        if lo.size < 1:
            raise ValueError("design space needs at least one dimension")
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in length")
        if not np.all(lo < hi):
            raise ValueError("every lower bound must be strictly below its upper bound")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, dim: int, lo: float, hi: float) -> "DesignSpace":
        return cls([lo] * dim, [hi] * dim)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def clip(self, X: np.ndarray) -> np.ndarray:
        return np.clip(X, self.lower, self.upper)

    def sub(self, dims: Sequence[int]) -> "DesignSpace":
        dims = list(dims)
        return DesignSpace(self.lower[dims], self.upper[dims])

    def uniform(self, stream: np.random.Generator, n: int) -> np.ndarray:
        return self.lower + (self.upper - self.lower) * stream.random((n, self.dim))

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DesignSpace":
        return cls(d["lower"], d["upper"])


@dataclass(frozen=True)
class CutCenter:
    """Anchor point of the cut decomposition, validated against its space."""

    coords: np.ndarray
    space: DesignSpace

    def __init__(self, coords: Sequence[float], space: DesignSpace):
        c = np.array(coords, dtype=float).ravel()
        if c.size != space.dim:
            raise ValueError(f"center has {c.size} coordinates, space has {space.dim}")
        if not space.contains(c):
            raise ValueError("cut-center lies outside the design space")
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "space", space)

    @classmethod
    def midpoint(cls, space: DesignSpace) -> "CutCenter":
        return cls(space.midpoint, space)

    @property
    def dim(self) -> int:
        return self.coords.size


def _check_index(center: CutCenter, i: int) -> None:
    if not 0 <= i < center.dim:
        raise IndexError(f"dimension index {i} out of range for p={center.dim}")


def _check_value(center: CutCenter, i: int, value: float) -> None:
    lo, hi = center.space.lower[i], center.space.upper[i]
    if not lo <= value <= hi:
        raise ValueError(f"value {value} outside [{lo}, {hi}] on dimension {i}")


def axis_point(center: CutCenter, i: int, value: float) -> np.ndarray:
    """Copy of the center with coordinate ``i`` replaced by ``value``."""
    _check_index(center, i)
    _check_value(center, i, value)
    x = center.coords.copy()
    x[i] = value
    return x


def plane_point(center: CutCenter, i: int, j: int, vi: float, vj: float) -> np.ndarray:
    """Copy of the center with coordinates ``i`` and ``j`` replaced."""
    if i == j:
        raise ValueError("plane point needs two distinct dimensions")
    _check_index(center, i)
    _check_index(center, j)
    _check_value(center, i, vi)
    _check_value(center, j, vj)
    x = center.coords.copy()
    x[i] = vi
    x[j] = vj
    return x


class BudgetedFunction:
    """Black-box objective that counts every evaluation.

    The counter is guarded by a lock so concurrent callers always see an
    exact total.  With ``budget`` set, the call that would exceed it raises
    :class:`BudgetExhausted` without evaluating.
    """

    def __init__(self, evaluator: Callable[[np.ndarray], float], arity: int,
                 budget: int | None = None, space: DesignSpace | None = None):
        if arity < 1:
            raise ValueError("arity must be positive")
        if budget is not None and budget < 1:
            raise ValueError("budget must be positive")
        self.evaluator = evaluator
        self.arity = arity
        self.budget = budget
        self.space = space
        self._count = 0
        self._lock = threading.Lock()

    @property
    def eval_count(self) -> int:
        return self._count

    @property
    def remaining(self) -> int | None:
        if self.budget is None:
            return None
        return self.budget - self._count

    def __call__(self, x) -> float:
        return evaluate(self, x)


def evaluate(f: BudgetedFunction, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != f.arity:
        raise ValueError(f"expected {f.arity} inputs, got {x.size}")
    if f.space is not None and not f.space.contains(x, tol=1e-12):
        raise ValueError("evaluation point outside the declared design space")
    with f._lock:
        if f.budget is not None and f._count >= f.budget:
            raise BudgetExhausted(f"evaluation budget of {f.budget} exhausted")
        f._count += 1
    return float(f.evaluator(x))


class SampleSet:
    """Training points and their responses; duplicate points are rejected."""

    def __init__(self, points=None, responses=None, dim: int | None = None):
        if points is None:
            if dim is None:
                raise ValueError("an empty sample set needs its dimension")
            self.points = np.empty((0, dim))
            self.responses = np.empty(0)
            return
        P = np.atleast_2d(np.asarray(points, dtype=float))
        y = np.asarray(responses, dtype=float).ravel()
        if P.shape[0] != y.size:
            raise ValueError("points and responses differ in length")
        self.points = np.empty((0, P.shape[1]))
        self.responses = np.empty(0)
        for p, v in zip(P, y):
            self.add(p, v)

    def __len__(self) -> int:
        return self.responses.size

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def contains(self, x, tol: float = DUPLICATE_TOL) -> bool:
        if len(self) == 0:
            return False
        d = np.linalg.norm(self.points - np.asarray(x, dtype=float), axis=1)
        return bool(d.min() <= tol)

    def add(self, x, y: float) -> None:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise ValueError(f"point has {x.size} coordinates, set has {self.dim}")
        if self.contains(x):
            raise ValueError(f"duplicate sample point {x.tolist()}")
        self.points = np.vstack([self.points, x])
        self.responses = np.append(self.responses, float(y))


@dataclass(frozen=True)
class Distribution:
    """Independent input distribution.

    ``param1``/``param2`` are (mean, std) for Normal and Gumbel, and
    (lower, upper) for Uniform.  Gumbel moments are converted to a
    max-Gumbel location/scale pair.
    """

    kind: str
    param1: float
    param2: float

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("normal", "uniform", "gumbel"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "uniform":
            if not self.param1 < self.param2:
                raise ValueError("uniform lower bound must be below upper bound")
        elif not self.param2 > 0:
            raise ValueError(f"{kind} standard deviation must be positive")

    @property
    def gumbel_scale(self) -> float:
        return self.param2 * math.sqrt(6.0) / math.pi

    @property
    def gumbel_loc(self) -> float:
        return self.param1 - EULER_GAMMA * self.gumbel_scale

    def frozen(self):
        if self.kind == "normal":
            return stats.norm(loc=self.param1, scale=self.param2)
        if self.kind == "uniform":
            return stats.uniform(loc=self.param1, scale=self.param2 - self.param1)
        return stats.gumbel_r(loc=self.gumbel_loc, scale=self.gumbel_scale)

    @property
    def mean(self) -> float:
        if self.kind == "uniform":
            return 0.5 * (self.param1 + self.param2)
        return self.param1

    def bounds(self, tail: float = 1e-3) -> tuple[float, float]:
        """Support for bounded kinds, else the ``tail`` / ``1 - tail`` quantiles."""
        if self.kind == "uniform":
            return self.param1, self.param2
        fz = self.frozen()
        return float(fz.ppf(tail)), float(fz.ppf(1.0 - tail))


def sample_distribution(d: Distribution, stream: np.random.Generator, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one draw")
    if d.kind == "normal":
        return stream.normal(d.param1, d.param2, n)
    if d.kind == "uniform":
        return stream.uniform(d.param1, d.param2, n)
    return stream.gumbel(d.gumbel_loc, d.gumbel_scale, n)


def space_from_distributions(dists: Sequence[Distribution], tail: float = 1e-3) -> DesignSpace:
    b = [d.bounds(tail) for d in dists]
    return DesignSpace([lo for lo, _ in b], [hi for _, hi in b])


def sample_joint(dists: Sequence[Distribution], stream: np.random.Generator, n: int,
                 space: DesignSpace | None = None) -> np.ndarray:
    """Column-wise independent draws, optionally clipped into ``space``."""
    X = np.column_stack([sample_distribution(d, stream, n) for d in dists])
    return space.clip(X) if space is not None else X


def make_stream(seed: int) -> np.random.Generator:
    """PCG64 generator; equal seeds give bitwise-equal sequences."""
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.PCG64(seed))


def spawn_streams(seed: int, n: int) -> list[np.random.Generator]:
    """``n`` independent child streams with a fixed index-to-stream assignment."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]
