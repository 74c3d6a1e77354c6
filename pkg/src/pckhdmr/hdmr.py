"""Cut-HDMR construction with adaptive two-stage sampling.

The expansion is truncated after the second-order terms:

    f(x) ~ f0 + sum_i f_i(x_i) + sum_{i<j} f_ij(x_i, x_j)

Each component is fitted by a pluggable surrogate backend (PC-Kriging,
ordinary Kriging, or sparse PCE).  First-order terms are refined by the
proportional insertion rule; second-order terms are found by additive
probes and refined by maximum-entropy selection.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from . import sampling
from .core import (DUPLICATE_TOL, BudgetedFunction, BudgetExhausted, CutCenter, DesignSpace,
                   axis_point, make_stream, plane_point)
from .surrogate import BACKENDS, fit_component, load_model

logger = logging.getLogger(__name__)

ZERO, LINEAR, SURROGATE = "zero", "linear", "surrogate"
# entropy selection needs a correlation length even when the backend has none
DEFAULT_PCE_THETA = 10.0
# correlation parameters used for candidate selection (unit-box scale); a
# likelihood fit on a handful of points can put one axis at either theta bound
# and the entropy criterion would then ignore that axis entirely
SELECTION_THETA = (1.0, 100.0)


class ComponentFitError(RuntimeError):
    def __init__(self, key, cause):
        super().__init__(f"surrogate fit failed for component {key}: {cause}")
        self.key = key
        self.cause = cause


class PartialBuildError(RuntimeError):
    """The function's hard budget ran out mid-build; ``model`` holds what was built."""

    def __init__(self, model: "HdmrModel"):
        super().__init__(f"evaluation budget exhausted after {model.total_evals} evaluations")
        self.model = model


class _SoftCap(Exception):
    pass


def component_key(i: int, j: int | None = None) -> tuple:
    if j is None:
        return (int(i),)
    if i == j:
        raise ValueError("second-order key needs two distinct dimensions")
    return (int(min(i, j)), int(max(i, j)))


@dataclass(frozen=True)
class BuildConfig:
    C: float = 0.5
    epsilon: float = 1e-3
    linearity_tol: float = 1e-6
    stage1_max: int = 20
    stage2_max: int = 30
    backend: str = "pc-kriging"
    mode: str = "SPC"
    probe_count: int = 3
    patience: int = 2
    seed: int = 0
    max_degree_1d: int = 10
    max_degree_2d: int = 5
    max_evals: int | None = None

    def __post_init__(self):
        if not 0.0 < self.C < 1.0:
            raise ValueError("C must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.stage1_max < 2 or self.stage2_max < 0 or self.probe_count < 1 or self.patience < 1:
            raise ValueError("invalid sampling caps")


@dataclass
class ComponentTerm:
    """One fitted component.

    First-order terms keep their exact axis samples (``values``/``responses``
    are coordinates and ``f(axis point) - f0``).  Every term is shifted so it
    vanishes on the cut lines through the center.
    """

    key: tuple
    kind: str
    center: np.ndarray
    model: object = None
    sample_count: int = 0
    values: np.ndarray | None = None
    responses: np.ndarray | None = None
    line: tuple | None = None

    def __post_init__(self):
        if (self.kind == SURROGATE) != (self.model is not None):
            raise ValueError("a surrogate term needs a model, other kinds must not carry one")
        self.center = np.asarray(self.center, dtype=float).ravel()

    @property
    def order(self) -> int:
        return len(self.key)

    def _raw(self, X: np.ndarray) -> np.ndarray:
        if self.kind == LINEAR:
            a, fa, b, fb = self.line
            return fa + (fb - fa) * (X[:, 0] - a) / (b - a)
        return np.asarray(self.model.predict(X), dtype=float).ravel()

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        X = X.reshape(-1, self.order)
        if self.kind == ZERO:
            return np.zeros(X.shape[0])
        c = self.center
        if self.order == 1:
            return self._raw(X) - self._raw(c[None, :])[0]
        ci = np.column_stack([np.full(X.shape[0], c[0]), X[:, 1]])
        cj = np.column_stack([X[:, 0], np.full(X.shape[0], c[1])])
        return self._raw(X) - self._raw(ci) - self._raw(cj) + self._raw(c[None, :])[0]

    def to_dict(self) -> dict:
        d = {"key": list(self.key), "kind": self.kind, "center": self.center.tolist(),
             "sample_count": self.sample_count}
        if self.model is not None:
            d["model"] = self.model.to_dict()
        if self.values is not None:
            d["values"] = self.values.tolist()
            d["responses"] = self.responses.tolist()
        if self.line is not None:
            d["line"] = list(self.line)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ComponentTerm":
        return cls(
            key=tuple(d["key"]), kind=d["kind"], center=np.asarray(d["center"]),
            model=load_model(d["model"]) if "model" in d else None,
            sample_count=int(d["sample_count"]),
            values=np.asarray(d["values"]) if "values" in d else None,
            responses=np.asarray(d["responses"]) if "responses" in d else None,
            line=tuple(d["line"]) if "line" in d else None,
        )


@dataclass
class HdmrModel:
    space: DesignSpace
    center: np.ndarray
    f0: float
    terms: dict
    coupling: np.ndarray
    backend: str
    total_evals: int
    probe_evals: int = 0
    complete: bool = True
    config: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.space.dim

    def term(self, i: int, j: int | None = None) -> ComponentTerm | None:
        return self.terms.get(component_key(i, j))

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return sorted(k for k in self.terms if len(k) == 2)

    def predict_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} inputs, got {X.shape[1]}")
        out = np.full(X.shape[0], self.f0)
        for key, term in self.terms.items():
            out += term(X[:, list(key)])
        return out

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("predict takes a single point; use predict_batch for rows")
        return float(self.predict_batch(x[None, :])[0])

    __call__ = predict_batch

    def component_values(self, X) -> dict:
        """Per-term contributions at rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return {key: term(X[:, list(key)]) for key, term in self.terms.items()}

    def to_dict(self) -> dict:
        return {
            "format": "pckhdmr-model/1",
            "space": self.space.to_dict(),
            "center": self.center.tolist(),
            "f0": self.f0,
            "backend": self.backend,
            "coupling": self.coupling.astype(int).tolist(),
            "total_evals": self.total_evals,
            "probe_evals": self.probe_evals,
            "complete": self.complete,
            "config": self.config,
            "terms": [t.to_dict() for t in self.terms.values()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HdmrModel":
        terms = [ComponentTerm.from_dict(t) for t in d["terms"]]
        return cls(space=DesignSpace.from_dict(d["space"]), center=np.asarray(d["center"]),
                   f0=float(d["f0"]), terms={t.key: t for t in terms},
                   coupling=np.asarray(d["coupling"], dtype=bool), backend=d["backend"],
                   total_evals=int(d["total_evals"]), probe_evals=int(d["probe_evals"]),
                   complete=bool(d["complete"]), config=d.get("config", {}))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "HdmrModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def predict(m: HdmrModel, x) -> float:
    return m.predict(x)


def predict_batch(m: HdmrModel, X) -> np.ndarray:
    return m.predict_batch(X)


def linearity_test(values, responses, center_value: float, tol: float) -> bool:
    """Does the line through the two seed points pass through zero at the center?

    ``values``/``responses`` are the two boundary seeds of a first-order
    component (responses already have ``f0`` removed).
    """
    (a, b), (fa, fb) = np.asarray(values, dtype=float), np.asarray(responses, dtype=float)
    at_center = fa + (fb - fa) * (center_value - a) / (b - a)
    return abs(at_center) <= tol * (1.0 + max(abs(fa), abs(fb)))


@dataclass
class _Axis:
    i: int
    values: list
    responses: list
    evals: int = 0
    streak: int = 0
    kind: str = SURROGATE
    done: bool = False
    model: object = None


class _Builder:
    def __init__(self, f: BudgetedFunction, space: DesignSpace, center: CutCenter, cfg: BuildConfig):
        self.f = f
        self.space = space
        self.center = center
        self.cfg = cfg
        self.rng = make_stream(cfg.seed)
        self.start = f.eval_count
        self.f0 = None
        self.axes: list[_Axis] = []
        self.terms: dict = {}
        self.pairs: list = []
        self.probe_evals = 0
        self.pair_data: dict = {}

    # -- evaluation -------------------------------------------------------
    def used(self) -> int:
        return self.f.eval_count - self.start

    def ev(self, x) -> float:
        if self.cfg.max_evals is not None and self.used() >= self.cfg.max_evals:
            raise _SoftCap()
        return self.f(x)

    # -- fitting ----------------------------------------------------------
    def _fit(self, key, X, y, sub: DesignSpace, degree: int):
        try:
            return fit_component(self.cfg.backend, X, y, sub, degree, self.cfg.mode)
        except Exception as exc:  # noqa: BLE001 - re-raised with the component key
            raise ComponentFitError(key, exc) from exc

    def fit_axis(self, ax: _Axis):
        X = np.asarray(ax.values)[:, None]
        return self._fit(component_key(ax.i), X, np.asarray(ax.responses),
                         self.space.sub([ax.i]), self.cfg.max_degree_1d)

    # -- stage one --------------------------------------------------------
    def seed_axes(self):
        c = self.center.coords
        for i in range(self.space.dim):
            self.axes.append(_Axis(i, [c[i]], [0.0]))
        for ax in self.axes:
            for v in (self.space.lower[ax.i], self.space.upper[ax.i]):
                if abs(v - c[ax.i]) <= DUPLICATE_TOL:
                    continue
                y = self.ev(axis_point(self.center, ax.i, v)) - self.f0
                ax.values.append(v)
                ax.responses.append(y)
                ax.evals += 1

    def classify(self, ax: _Axis):
        c = self.center.coords[ax.i]
        seeds = [(v, r) for v, r in zip(ax.values, ax.responses) if v != c]
        if len(seeds) < 2:
            ax.kind = LINEAR if seeds else ZERO
            ax.done = True
            return
        (a, fa), (b, fb) = seeds[0], seeds[1]
        tol = self.cfg.linearity_tol
        if abs(fa) <= tol * (1.0 + abs(self.f0)) and abs(fb) <= tol * (1.0 + abs(self.f0)):
            ax.kind = ZERO
            ax.done = True
        elif linearity_test([a, b], [fa, fb], c, tol):
            ax.kind = LINEAR
            ax.done = True

    def refine_step(self, ax: _Axis):
        """One proportional insertion on a nonlinear axis."""
        model = self.fit_axis(ax)
        srt = sampling.SortedAxisSamples.from_unsorted(ax.values, ax.responses)
        x_new = sampling.proportional_insert(srt, self.cfg.C)
        if np.min(np.abs(srt.values - x_new)) <= DUPLICATE_TOL:
            ax.done = True
            return
        c = self.center.coords[ax.i]
        pred = model.predict(np.array([[x_new], [c]]))
        f_hat = self.f0 + pred[0] - pred[1]
        f_true = self.ev(axis_point(self.center, ax.i, x_new))
        ax.values.append(x_new)
        ax.responses.append(f_true - self.f0)
        ax.evals += 1
        ax.streak = ax.streak + 1 if sampling.converged(f_true, f_hat, self.cfg.epsilon) else 0
        if ax.streak >= self.cfg.patience or ax.evals >= self.cfg.stage1_max:
            ax.done = True

    def refine_axes(self):
        # round-robin keeps axes independent and shares a soft cap fairly
        active = [ax for ax in self.axes if not ax.done]
        while active:
            for ax in active:
                self.refine_step(ax)
            active = [ax for ax in active if not ax.done]

    def finish_axis(self, ax: _Axis) -> ComponentTerm:
        key = component_key(ax.i)
        c = self.center.coords[ax.i]
        vals = np.asarray(ax.values, dtype=float)
        resp = np.asarray(ax.responses, dtype=float)
        order = np.argsort(vals)
        vals, resp = vals[order], resp[order]
        common = dict(key=key, center=[c], sample_count=ax.evals, values=vals, responses=resp)
        if ax.kind == ZERO:
            return ComponentTerm(kind=ZERO, **common)
        if ax.kind == LINEAR or vals.size < 3:
            if vals.size < 2:
                return ComponentTerm(kind=ZERO, **common)
            lo, hi = 0, vals.size - 1
            return ComponentTerm(kind=LINEAR, line=(vals[lo], resp[lo], vals[hi], resp[hi]),
                                 **common)
        model = self.fit_axis(ax)
        return ComponentTerm(kind=SURROGATE, model=model, **common)

    # -- coupling detection -----------------------------------------------
    def _off_center(self, i: int):
        c = self.center.coords[i]
        ax = self.axes[i]
        return [(v, r) for v, r in zip(ax.values, ax.responses) if abs(v - c) > DUPLICATE_TOL]

    def detect_pairs(self):
        p = self.space.dim
        if p < 2:
            return
        eps = self.cfg.epsilon
        off = [self._off_center(i) for i in range(p)]
        if any(len(o) == 0 for o in off):
            raise RuntimeError("cannot probe coupling without off-center axis samples")
        additive = True
        for _ in range(self.cfg.probe_count):
            picks = [o[self.rng.integers(len(o))] for o in off]
            x = np.array([v for v, _ in picks])
            f_true = self.ev(x)
            self.probe_evals += 1
            f_hat = self.f0 + sum(r for _, r in picks)
            if not sampling.converged(f_true, f_hat, eps):
                additive = False
        if additive:
            return
        for i in range(p):
            for j in range(i + 1, p):
                vi, ri = off[i][self.rng.integers(len(off[i]))]
                vj, rj = off[j][self.rng.integers(len(off[j]))]
                x = plane_point(self.center, i, j, vi, vj)
                f_true = self.ev(x)
                self.probe_evals += 1
                resid = f_true - self.f0 - ri - rj
                if abs(resid) > eps * (1.0 + abs(f_true)):
                    self.pairs.append((i, j))
                    self.pair_data[(i, j)] = {"points": [[vi, vj]], "f": [f_true], "evals": 0}

    # -- stage two --------------------------------------------------------
    def _anchors(self, i: int, j: int) -> np.ndarray:
        c = self.center.coords
        pts = [[u, c[j]] for u in self.axes[i].values]
        pts += [[c[i], v] for v in self.axes[j].values if abs(v - c[j]) > DUPLICATE_TOL]
        return np.asarray(pts, dtype=float)

    def _pair_targets(self, i, j, P, F):
        P = np.asarray(P, dtype=float)
        ti, tj = self.terms[component_key(i)], self.terms[component_key(j)]
        return np.asarray(F) - self.f0 - ti(P[:, 0]) - tj(P[:, 1])

    def _fit_pair(self, i, j):
        d = self.pair_data[(i, j)]
        anchors = self._anchors(i, j)
        P = np.asarray(d["points"], dtype=float)
        X = np.vstack([anchors, P])
        y = np.concatenate([np.zeros(len(anchors)), self._pair_targets(i, j, P, d["f"])])
        sub = self.space.sub([i, j])
        model = self._fit(component_key(i, j), X, y, sub, self.cfg.max_degree_2d)
        return model, X, sub

    def _candidates(self, i, j, X):
        d = self.pair_data[(i, j)]
        if "grid" not in d:
            d["grid"] = sampling.build_candidate_grid(self.axes[i].values,
                                                      self.axes[j].values).candidates
        cands = d["grid"]
        ok = sampling.admissible(X, cands)
        if not ok.any():
            # stage-one grid consumed: refine on the coordinates sampled so far
            d["grid"] = sampling.build_candidate_grid(X[:, 0], X[:, 1]).candidates
            cands = d["grid"]
            ok = sampling.admissible(X, cands)
        return cands[ok]

    def refine_pair(self, i, j):
        d = self.pair_data[(i, j)]
        model, X, sub = self._fit_pair(i, j)
        cands = self._candidates(i, j, X)
        if cands.shape[0] == 0:
            d["done"] = True
            return
        theta = getattr(model, "theta", None)
        if theta is None:
            theta = np.full(2, DEFAULT_PCE_THETA)
        theta = np.clip(theta, *SELECTION_THETA)
        sigma2 = max(float(getattr(model, "sigma2", 1.0)), 1e-300)
        scale = lambda Z: (Z - sub.lower) / (sub.upper - sub.lower)  # noqa: E731
        k = sampling.max_entropy_index(scale(X), scale(cands), theta, sigma2)
        vi, vj = cands[k]
        term = ComponentTerm(key=(i, j), kind=SURROGATE, center=self.center.coords[[i, j]],
                             model=model)
        ti, tj = self.terms[component_key(i)], self.terms[component_key(j)]
        f_hat = self.f0 + ti([vi])[0] + tj([vj])[0] + term([[vi, vj]])[0]
        f_true = self.ev(plane_point(self.center, i, j, vi, vj))
        d["points"].append([vi, vj])
        d["f"].append(f_true)
        d["evals"] += 1
        d["streak"] = d.get("streak", 0) + 1 if sampling.converged(f_true, f_hat, self.cfg.epsilon) else 0
        if d["streak"] >= self.cfg.patience or d["evals"] >= self.cfg.stage2_max:
            d["done"] = True

    def refine_pairs(self):
        active = [pr for pr in self.pairs if self.cfg.stage2_max > 0]
        while active:
            for pr in active:
                self.refine_pair(*pr)
            active = [pr for pr in active if not self.pair_data[pr].get("done")]

    def finish_pair(self, i, j) -> ComponentTerm:
        model, _, _ = self._fit_pair(i, j)
        return ComponentTerm(key=(i, j), kind=SURROGATE, center=self.center.coords[[i, j]],
                             model=model, sample_count=self.pair_data[(i, j)]["evals"])

    # -- assembly ---------------------------------------------------------
    def assemble(self, complete: bool) -> HdmrModel:
        p = self.space.dim
        for ax in self.axes:
            if component_key(ax.i) not in self.terms:
                self.terms[component_key(ax.i)] = self.finish_axis(ax)
        for i in range(len(self.axes), p):
            self.terms[component_key(i)] = ComponentTerm(key=(i,), kind=ZERO,
                                                         center=[self.center.coords[i]])
        coupling = np.eye(p, dtype=bool)
        for i, j in self.pairs:
            self.terms[(i, j)] = self.finish_pair(i, j)
            coupling[i, j] = coupling[j, i] = True
        return HdmrModel(space=self.space, center=self.center.coords.copy(),
                         f0=float(self.f0) if self.f0 is not None else float("nan"),
                         terms=dict(sorted(self.terms.items())), coupling=coupling,
                         backend=self.cfg.backend, total_evals=self.used(),
                         probe_evals=self.probe_evals, complete=complete,
                         config=asdict(self.cfg))

    def run(self) -> HdmrModel:
        self.f0 = self.ev(self.center.coords)
        self.seed_axes()
        for ax in self.axes:
            self.classify(ax)
        self.refine_axes()
        for ax in self.axes:
            self.terms[component_key(ax.i)] = self.finish_axis(ax)
        self.detect_pairs()
        self.refine_pairs()
        return self.assemble(complete=True)


def build(f, space: DesignSpace, center: CutCenter | None = None,
          cfg: BuildConfig | None = None) -> HdmrModel:
    """Build a second-order Cut-HDMR surrogate of ``f`` over ``space``.

    ``f`` is a :class:`BudgetedFunction` or a plain callable (wrapped and
    counted).  With ``cfg.max_evals`` set, adaptive stages stop once that
    many evaluations are spent and the model is returned with
    ``complete=False``.  If ``f``'s own budget runs out, :class:`PartialBuildError`
    is raised carrying the partial model.
    """
    cfg = cfg or BuildConfig()
    if not isinstance(f, BudgetedFunction):
        f = BudgetedFunction(f, space.dim, space=space)
    if f.arity != space.dim:
        raise ValueError("function arity does not match the design space")
    if center is None:
        center = CutCenter.midpoint(space)
    elif not isinstance(center, CutCenter):
        center = CutCenter(center, space)
    b = _Builder(f, space, center, cfg)
    try:
        return b.run()
    except _SoftCap:
        logger.info("evaluation cap %s reached; returning partial model", cfg.max_evals)
        if b.f0 is None:
            raise ValueError("evaluation cap too small to evaluate the cut-center")
        return b.assemble(complete=False)
    except BudgetExhausted:
        if b.f0 is None:
            raise
        raise PartialBuildError(b.assemble(complete=False)) from None
