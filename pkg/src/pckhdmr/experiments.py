"""End-to-end experiment drivers behind the command-line interface.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns a
:class:`Table`: deterministic rows (every row carries the seed and the
config hash) plus a metadata dict.  Wall-clock timings live in the
metadata, not the rows, so re-runs give byte-identical row bodies.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.stats import qmc

from . import __version__
from .bench import (CANTILEVER_DISTRIBUTIONS, CANTILEVER_NAMES, BenchmarkFunction,
                    get_function, sample_count_formula)
from .core import BudgetedFunction, Distribution, spawn_streams
from .hdmr import BuildConfig, HdmrModel, build
from .metrics import DEFAULT_VALIDATION, MetricReport, validation_points
from .sensitivity import sensitivity_indices
from .surrogate.kriging import fit_kriging

EXPERIMENTS = ("coupling", "c-sweep", "accuracy", "cost", "cantilever", "sensitivity", "fit")
METHODS = {
    "pc-kriging-hdmr": "pc-kriging",
    "kriging-hdmr": "kriging",
    "pce-hdmr": "pce",
    "kriging-full": None,
}
HDMR_METHODS = ("pc-kriging-hdmr", "kriging-hdmr", "pce-hdmr")
SWEEP_C = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
COST_DIMS = (10, 15, 20, 25, 30, 35)
COST_S = 8
CANTILEVER_BUDGETS = (101, 1001)

_DEFAULTS = {
    "coupling": dict(functions=["rosenbrock9"], methods=["pc-kriging-hdmr"]),
    "c-sweep": dict(functions=["rosenbrock9"], methods=["pc-kriging-hdmr"], replicates=10),
    "accuracy": dict(functions=[f"table3/{n}" for n in range(1, 7)],
                     methods=list(METHODS)),
    "cost": dict(functions=[f"cost/{p}" for p in COST_DIMS],
                 methods=["pc-kriging-hdmr", "kriging-hdmr"]),
    "cantilever": dict(functions=["cantilever"], methods=list(HDMR_METHODS),
                       budgets=list(CANTILEVER_BUDGETS)),
    "sensitivity": dict(functions=["cantilever"], methods=["pc-kriging-hdmr"], budgets=[1001]),
    "fit": dict(functions=["rosenbrock9"], methods=["pc-kriging-hdmr"]),
}

_BUILD_FIELDS = {f.name for f in fields(BuildConfig)}


class ConfigError(ValueError):
    """Rejected experiment configuration (raised before any evaluation)."""


@dataclass
class ExperimentConfig:
    experiment: str
    functions: list = field(default_factory=list)
    methods: list = field(default_factory=list)
    seed: int = 0
    replicates: int = 1
    budgets: list = field(default_factory=list)
    C_values: list = field(default_factory=list)
    n_validation: int = DEFAULT_VALIDATION
    mc_samples: int = 100_000
    build: dict = field(default_factory=dict)
    save_model: str | None = None

    @classmethod
    def create(cls, experiment: str, **overrides) -> "ExperimentConfig":
        """Defaults for ``experiment`` with ``overrides`` applied, validated."""
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}")
        base = dict(_DEFAULTS[experiment])
        unknown = set(overrides) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        base.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(experiment=experiment, **base)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not self.functions:
            raise ConfigError("no functions configured")
        for name in self.functions:
            try:
                get_function(name)
            except (KeyError, ValueError) as exc:
                raise ConfigError(str(exc.args[0]) if exc.args else str(exc)) from None
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {sorted(METHODS)}")
        if not self.methods:
            raise ConfigError("no methods configured")
        if self.experiment in ("coupling", "c-sweep", "cost", "cantilever", "sensitivity") \
                and "kriging-full" in self.methods:
            raise ConfigError(f"kriging-full is not an HDMR method; not valid for {self.experiment}")
        bad = set(self.build) - _BUILD_FIELDS
        if bad:
            raise ConfigError(f"unknown build settings: {sorted(bad)}")
        if int(self.seed) < 0:
            raise ConfigError("seed must be non-negative")
        if self.replicates < 1:
            raise ConfigError("replicates must be positive")
        if any(int(b) < 1 for b in self.budgets):
            raise ConfigError("budgets must be positive")
        if any(not 0.0 < float(c) < 1.0 for c in self.C_values):
            raise ConfigError("C values must lie in (0, 1)")
        if self.n_validation < 2:
            raise ConfigError("n_validation must be at least 2")
        try:
            self.build_config(self.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def build_config(self, seed: int, **extra) -> BuildConfig:
        opts = dict(self.build)
        opts.update(extra)
        opts["seed"] = int(seed)
        return BuildConfig(**opts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("save_model")
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Table:
    experiment: str
    columns: list
    rows: list
    meta: dict


# -- helpers ------------------------------------------------------------------

def _streams(seed: int):
    """Independent (build, validation) streams for one seed."""
    return spawn_streams(seed, 2)


def _dists_for(bf: BenchmarkFunction):
    if bf.name.startswith("cantilever"):
        return list(CANTILEVER_DISTRIBUTIONS)
    return None


def _validation(bf: BenchmarkFunction, n: int, seed: int):
    X = validation_points(bf.space, n, _streams(seed)[1], _dists_for(bf))
    checked = BudgetedFunction(bf, bf.p, space=bf.space)
    y = np.array([checked(x) for x in X])
    return X, y


def _score(predict, X, y) -> MetricReport:
    return MetricReport.from_predictions(y, predict(X))


def _build_hdmr(bf: BenchmarkFunction, cfg: BuildConfig) -> HdmrModel:
    return build(BudgetedFunction(bf, bf.p, space=bf.space), bf.space, cfg=cfg)


def _full_kriging(bf: BenchmarkFunction, n: int, seed: int):
    """Ordinary Kriging on an ``n``-point Latin hypercube over the whole box."""
    sampler = qmc.LatinHypercube(d=bf.p, seed=_streams(seed)[0])
    X = qmc.scale(sampler.random(n), bf.space.lower, bf.space.upper)
    f = BudgetedFunction(bf, bf.p, budget=n, space=bf.space)
    y = np.array([f(x) for x in X])
    return fit_kriging(X, y, bf.space)


def _tag(rows, cfg: ExperimentConfig):
    h = cfg.hash()
    for r in rows:
        r["config_hash"] = h
    return rows


def _r(x: float, digits: int = 10):
    return float(f"{x:.{digits}g}") if math.isfinite(x) else x


def _metric_cols(rep: MetricReport) -> dict:
    return {"r2": _r(rep.r2), "raae": _r(rep.raae), "rmae": _r(rep.rmae)}


# -- experiments ----------------------------------------------------------------

def run_coupling(cfg: ExperimentConfig) -> Table:
    rows, timings = [], {}
    backend = METHODS[cfg.methods[0]]
    seeds = [cfg.seed + r for r in range(cfg.replicates)]
    for name in cfg.functions:
        bf = get_function(name)
        for seed in seeds:
            t = time.perf_counter()
            m = _build_hdmr(bf, cfg.build_config(seed, backend=backend))
            timings[f"{name}/seed={seed}"] = time.perf_counter() - t
            for i, line in enumerate(m.coupling.astype(int)):
                row = {"function": name, "seed": seed, "row": i + 1}
                row.update({f"x{j + 1}": int(v) for j, v in enumerate(line)})
                rows.append(row)
    p = max(get_function(n).p for n in cfg.functions)
    cols = ["function", "seed", "row"] + [f"x{j + 1}" for j in range(p)] + ["config_hash"]
    return Table("coupling", cols, _tag(rows, cfg), {"wall_time_s": timings})


def run_c_sweep(cfg: ExperimentConfig) -> Table:
    Cs = [float(c) for c in (cfg.C_values or SWEEP_C)]
    backend = METHODS[cfg.methods[0]]
    rows, timings = [], {}
    for name in cfg.functions:
        bf = get_function(name)
        for C in Cs:
            reps = []
            for r in range(cfg.replicates):
                seed = cfg.seed + r
                X, y = _validation(bf, cfg.n_validation, seed)
                t = time.perf_counter()
                m = _build_hdmr(bf, cfg.build_config(seed, backend=backend, C=C))
                timings[f"{name}/C={C}/seed={seed}"] = time.perf_counter() - t
                rep = _score(m.predict_batch, X, y)
                reps.append(rep)
                rows.append({"function": name, "kind": "replicate", "C": C, "seed": seed,
                             "n_evals": m.total_evals, **_metric_cols(rep)})
            rows.append({"function": name, "kind": "median", "C": C, "seed": cfg.seed,
                         "n_evals": "",
                         "r2": _r(float(np.median([q.r2 for q in reps]))),
                         "raae": _r(float(np.median([q.raae for q in reps]))),
                         "rmae": _r(float(np.median([q.rmae for q in reps])))})
    rows.sort(key=lambda r: (r["function"], r["kind"] != "median", r["C"], r["seed"]))
    cols = ["function", "kind", "C", "seed", "n_evals", "r2", "raae", "rmae", "config_hash"]
    return Table("c-sweep", cols, _tag(rows, cfg), {"wall_time_s": timings})


def run_accuracy(cfg: ExperimentConfig) -> Table:
    rows, timings = [], {}
    for name in cfg.functions:
        bf = get_function(name)
        X, y = _validation(bf, cfg.n_validation, cfg.seed)
        # full Kriging gets the PC-Kriging-HDMR sample count unless a budget is set
        full_n = int(cfg.budgets[0]) if cfg.budgets else None
        for method in cfg.methods:
            backend = METHODS[method]
            t = time.perf_counter()
            if backend is None:
                if full_n is None:
                    ref = _build_hdmr(bf, cfg.build_config(cfg.seed, backend="pc-kriging"))
                    full_n = ref.total_evals
                model = _full_kriging(bf, full_n, cfg.seed)
                predict, n_evals = model.predict, full_n
            else:
                extra = {"backend": backend}
                if cfg.budgets:
                    extra["max_evals"] = int(cfg.budgets[0])
                model = _build_hdmr(bf, cfg.build_config(cfg.seed, **extra))
                predict, n_evals = model.predict_batch, model.total_evals
                if method == "pc-kriging-hdmr" and full_n is None:
                    full_n = n_evals
            timings[f"{name}/{method}"] = time.perf_counter() - t
            rows.append({"function": name, "method": method, "seed": cfg.seed,
                         "n_evals": n_evals, **_metric_cols(_score(predict, X, y))})
    cols = ["function", "method", "seed", "n_evals", "r2", "raae", "rmae", "config_hash"]
    return Table("accuracy", cols, _tag(rows, cfg), {"wall_time_s": timings})


def run_cost(cfg: ExperimentConfig) -> Table:
    rows, timings = [], {}
    for name in cfg.functions:
        bf = get_function(name)
        row = {"function": name, "p": bf.p, "seed": cfg.seed}
        for method in cfg.methods:
            t = time.perf_counter()
            m = _build_hdmr(bf, cfg.build_config(cfg.seed, backend=METHODS[method]))
            timings[f"{name}/{method}"] = time.perf_counter() - t
            row[method] = m.total_evals
        row["full_second_order"] = sample_count_formula(bf.p, COST_S)
        rows.append(row)
    rows.sort(key=lambda r: (r["p"], r["function"]))
    cols = ["function", "p", "seed"] + list(cfg.methods) + ["full_second_order", "config_hash"]
    return Table("cost", cols, _tag(rows, cfg), {"wall_time_s": timings, "s": COST_S})


def run_cantilever(cfg: ExperimentConfig) -> Table:
    budgets = [int(b) for b in (cfg.budgets or CANTILEVER_BUDGETS)]
    rows, timings = [], {}
    for name in cfg.functions:
        bf = get_function(name)
        for r in range(cfg.replicates):
            seed = cfg.seed + r
            X, y = _validation(bf, cfg.n_validation, seed)
            for budget in budgets:
                for method in cfg.methods:
                    t = time.perf_counter()
                    m = _build_hdmr(bf, cfg.build_config(seed, backend=METHODS[method],
                                                         max_evals=budget))
                    timings[f"{name}/{budget}/{method}/seed={seed}"] = time.perf_counter() - t
                    rows.append({"function": name, "budget": budget, "method": method,
                                 "seed": seed, "n_evals": m.total_evals,
                                 "complete": int(m.complete), **_metric_cols(_score(m.predict_batch, X, y))})
    rows.sort(key=lambda r: (r["function"], r["budget"], r["method"], r["seed"]))
    cols = ["function", "budget", "method", "seed", "n_evals", "complete", "r2", "raae", "rmae",
            "config_hash"]
    return Table("cantilever", cols, _tag(rows, cfg), {"wall_time_s": timings})


def _input_dists(bf: BenchmarkFunction):
    dists = _dists_for(bf)
    if dists is None:
        dists = [Distribution("uniform", lo, hi) for lo, hi in zip(bf.space.lower, bf.space.upper)]
    return dists


def _names(bf: BenchmarkFunction):
    return list(CANTILEVER_NAMES) if bf.name.startswith("cantilever") else None


def run_sensitivity(cfg: ExperimentConfig) -> Table:
    bf = get_function(cfg.functions[0])
    extra = {"backend": METHODS[cfg.methods[0]]}
    if cfg.budgets:
        extra["max_evals"] = int(cfg.budgets[0])
    t = time.perf_counter()
    m = _build_hdmr(bf, cfg.build_config(cfg.seed, **extra))
    rep = sensitivity_indices(m, _input_dists(bf), cfg.mc_samples, cfg.seed)
    elapsed = time.perf_counter() - t
    rows = []
    for r in rep.rows(_names(bf)):
        rows.append({"function": bf.name, "seed": cfg.seed, **r, "index": _r(r["index"])})
    cols = ["function", "seed", "order", "rank", "variables", "index", "config_hash"]
    meta = {"wall_time_s": elapsed, "n_evals": m.total_evals,
            "total_variance": _r(rep.total_variance), "mc_samples": rep.mc_samples}
    return Table("sensitivity", cols, _tag(rows, cfg), meta)


def run_fit(cfg: ExperimentConfig) -> Table:
    bf = get_function(cfg.functions[0])
    method = cfg.methods[0]
    if METHODS[method] is None:
        raise ConfigError("fit builds an HDMR model; kriging-full is not supported")
    extra = {"backend": METHODS[method]}
    if cfg.budgets:
        extra["max_evals"] = int(cfg.budgets[0])
    t = time.perf_counter()
    m = _build_hdmr(bf, cfg.build_config(cfg.seed, **extra))
    elapsed = time.perf_counter() - t
    X, y = _validation(bf, cfg.n_validation, cfg.seed)
    if cfg.save_model:
        m.save(cfg.save_model)
    row = {"function": bf.name, "method": method, "seed": cfg.seed, "n_evals": m.total_evals,
           "probe_evals": m.probe_evals, "complete": int(m.complete),
           "pairs": " ".join(f"{i + 1}-{j + 1}" for i, j in m.pairs),
           **_metric_cols(_score(m.predict_batch, X, y))}
    cols = ["function", "method", "seed", "n_evals", "probe_evals", "complete", "pairs",
            "r2", "raae", "rmae", "config_hash"]
    meta = {"wall_time_s": elapsed}
    if cfg.save_model:
        meta["model_path"] = cfg.save_model
    return Table("fit", cols, _tag([row], cfg), meta)


RUNNERS = {
    "coupling": run_coupling,
    "c-sweep": run_c_sweep,
    "accuracy": run_accuracy,
    "cost": run_cost,
    "cantilever": run_cantilever,
    "sensitivity": run_sensitivity,
    "fit": run_fit,
}


def run(cfg: ExperimentConfig) -> Table:
    table = RUNNERS[cfg.experiment](cfg)
    table.meta = {"experiment": cfg.experiment, "config": cfg.to_dict(),
                  "config_hash": cfg.hash(), "version": __version__, **table.meta}
    return table
