"""Benchmark functions: the 9-D Rosenbrock coupling test, the six
high-dimensional test functions, the cost-scaling function, the sample-count
formula of a full second-order expansion and the cantilever tube limit state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DesignSpace, Distribution, space_from_distributions


@dataclass(frozen=True)
class BenchmarkFunction:
    name: str
    space: DesignSpace
    evaluator: Callable[[np.ndarray], float]
    known_minimum: float | None = None

    @property
    def p(self) -> int:
        return self.space.dim

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.p,):
            raise ValueError(f"{self.name} takes a length-{self.p} vector")
        return float(self.evaluator(x))

    def batch(self, X) -> np.ndarray:
        return np.array([self(x) for x in np.atleast_2d(X)])


def rosenbrock9(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (9,):
        raise ValueError("rosenbrock9 takes a length-9 vector")
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1.0) ** 2))


def _t1(x):
    x1, x2 = x
    return math.sin(x1 + x2) + (x1 - x2) ** 2 - 1.5 * x1 + 2.5 * x2 + 1.0


def _t2(x):
    x1, x2 = x
    return ((x2 - 1.275 * (x1 / math.pi) ** 2 - 5.0 * x1 / math.pi - 6.0) ** 2
            + 10.0 * (1.0 - 0.125 / math.pi) * math.cos(x1))


def _t3(x):
    # as printed: the squared term is (x_{i+1}^2 - x_i), unlike the classical form
    return float(np.sum((x[1:] ** 2 - x[:-1]) ** 2 + (x[:-1] - 1.0) ** 2))


def _t4(x):
    x1, x2, x3, x4, x5, x6, x7, x8, x9, x10 = x
    return (x1**2 + x2**2 + x1 * x2 - 14 * x1 - 16 * x2 + (x3 - 10) ** 2
            + 4 * (x4 - 5) ** 2 + (x5 - 3) ** 2 + 2 * (x6 - 1) ** 2 + 5 * x7**2
            + 7 * (x8 - 11) ** 2 + 2 * (x9 - 10) ** 2 + (x10 - 7) ** 2 + 45)


T5_C = np.array([-6.089, -17.164, -34.054, -5.914, -24.721,
                 -14.986, -24.100, -10.708, -26.662, -22.179])


def _t5(x):
    return float(np.sum(x * (T5_C + np.log(x / np.sum(x)))))


def _t6(x):
    i = np.arange(2, 17)
    return float((x[0] - 1.0) ** 2 + np.sum(i * (2.0 * x[1:] ** 2 - x[:-1]) ** 2))


_TABLE3 = {
    1: (_t1, DesignSpace.cube(2, -3.0, 3.0)),
    2: (_t2, DesignSpace([-5.0, 0.0], [10.0, 15.0])),
    3: (_t3, DesignSpace.cube(8, -3.0, 3.0)),
    4: (_t4, DesignSpace.cube(10, -10.0, 11.0)),
    5: (_t5, DesignSpace.cube(10, 2.1, 9.9)),
    6: (_t6, DesignSpace.cube(16, -5.0, 5.0)),
}


def table3_function(no: int) -> BenchmarkFunction:
    if no not in _TABLE3:
        raise ValueError(f"test function number must be 1..6, got {no}")
    fn, space = _TABLE3[no]
    return BenchmarkFunction(f"table3/{no}", space, fn)


def _cost_eval(x):
    a = x[:-1] ** 2
    b = x[1:] ** 2
    # exponents are >= 1, so a zero base gives zero
    return float(np.sum(np.power(a, b + 1.0) + np.power(b, a + 1.0)))


def cost_function(p: int) -> BenchmarkFunction:
    if p < 2:
        raise ValueError("cost function needs p >= 2")
    return BenchmarkFunction(f"cost/{p}", DesignSpace.cube(p, 0.0, 1.0), _cost_eval)


def sample_count_formula(p: int, s: int) -> int:
    """Samples for a full second-order cut expansion with ``s`` points per sub-item."""
    if p < 1 or s < 2:
        raise ValueError("need p >= 1 and s >= 2")
    return 1 + p * (s - 1) + p * (p - 1) * (s - 1) ** 2 // 2


# --- cantilever tube -------------------------------------------------------

# Lengths in mm, forces in kN, stresses in MPa (N/mm^2).  The torque is read
# in kN*m by default, like the forces; under that reading torque dominates
# the response.  NM_TO_NMM gives the literal N*m reading, where torsion is a
# minor stress next to bending.
KN_TO_N = 1.0e3
NM_TO_NMM = 1.0e3
KNM_TO_NMM = 1.0e6

CANTILEVER_NAMES = ("t", "d", "L1", "L2", "F1", "F2", "P", "T", "theta1", "theta2", "Sy")

CANTILEVER_DISTRIBUTIONS = (
    Distribution("normal", 5.0, 0.1),
    Distribution("normal", 42.0, 0.5),
    Distribution("uniform", 119.75, 120.25),
    Distribution("uniform", 59.75, 60.25),
    Distribution("normal", 3.0, 0.3),
    Distribution("normal", 3.0, 0.3),
    Distribution("gumbel", 12.0, 1.2),
    Distribution("normal", 90.0, 9.0),
    Distribution("uniform", -math.pi / 3, math.pi / 3),
    Distribution("uniform", -4 * math.pi / 5, 2 * math.pi / 5),
    Distribution("normal", 220.0, 22.0),
)


@dataclass(frozen=True)
class CantileverInputs:
    t: float
    d: float
    L1: float
    L2: float
    F1: float
    F2: float
    P: float
    T: float
    theta1: float
    theta2: float
    Sy: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("wall thickness must be positive")
        if not self.d > 2 * self.t:
            raise ValueError("outer diameter must exceed twice the wall thickness")

    @classmethod
    def from_vector(cls, x) -> "CantileverInputs":
        return cls(*(float(v) for v in x))

    @classmethod
    def means(cls) -> "CantileverInputs":
        return cls(*(d.mean for d in CANTILEVER_DISTRIBUTIONS))


def cantilever_G(inp: CantileverInputs, torque_scale: float = KNM_TO_NMM) -> float:
    """Limit state ``Sy - sqrt(sigma_x^2 + 3 tau_zx^2)`` in MPa.

    ``torque_scale`` converts the torque input to N*mm.
    """
    t, d = inp.t, inp.d
    inner = d - 2.0 * t
    A = math.pi / 4.0 * (d**2 - inner**2)
    I = math.pi / 64.0 * (d**4 - inner**4)
    J = 2.0 * I
    axial = (inp.P + inp.F1 * math.sin(inp.theta1) + inp.F2 * math.sin(inp.theta2)) * KN_TO_N
    M = (inp.F1 * inp.L1 * math.cos(inp.theta1) + inp.F2 * inp.L2 * math.cos(inp.theta2)) * KN_TO_N
    sigma = axial / A + M * d / (2.0 * I)
    tau = inp.T * torque_scale * d / (2.0 * J)
    return inp.Sy - math.sqrt(sigma**2 + 3.0 * tau**2)


def cantilever_space(tail: float = 1e-3) -> DesignSpace:
    """Modelling box: uniform supports, ``tail`` quantiles for the unbounded inputs."""
    return space_from_distributions(CANTILEVER_DISTRIBUTIONS, tail)


def cantilever(torque_scale: float = KNM_TO_NMM) -> BenchmarkFunction:
    name = "cantilever" if torque_scale == KNM_TO_NMM else f"cantilever/torque*{torque_scale:g}"
    if torque_scale == NM_TO_NMM:
        name = "cantilever/nm"
    return BenchmarkFunction(
        name, cantilever_space(),
        lambda x: cantilever_G(CantileverInputs.from_vector(x), torque_scale))


def get_function(name: str) -> BenchmarkFunction:
    """Registry lookup: ``rosenbrock9``, ``table3/<n>``, ``cost/<p>``,
    ``cantilever`` (torque in kN*m), ``cantilever/nm`` (torque in N*m),
    ``additive/<p>``."""
    if name == "rosenbrock9":
        return BenchmarkFunction("rosenbrock9", DesignSpace.cube(9, -2.0, 2.0), rosenbrock9, 0.0)
    if name == "cantilever":
        return cantilever()
    if name == "cantilever/nm":
        return cantilever(NM_TO_NMM)
    head, _, arg = name.partition("/")
    if head in ("table3", "cost") and arg.isdigit():
        return table3_function(int(arg)) if head == "table3" else cost_function(int(arg))
    if head == "additive" and arg.isdigit():
        return additive_quadratic(int(arg))
    raise KeyError(f"unknown benchmark function {name!r}")


def additive_quadratic(p: int) -> BenchmarkFunction:
    """Sum of squares on ``[-1, 1]^p``; exactly first-order."""
    return BenchmarkFunction(f"additive/{p}", DesignSpace.cube(p, -1.0, 1.0),
                             lambda x: float(np.sum(x**2)), 0.0)
