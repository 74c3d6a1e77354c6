"""Variance-based sensitivity indices of a fitted cut-HDMR model.

Each index is the Monte Carlo variance of one component function divided by
the variance of the full model output, with inputs drawn from their
distributions and clipped to the model's box.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Distribution, sample_joint, spawn_streams
from .hdmr import HdmrModel

MIN_SAMPLES = 1000
BATCH = 20000


@dataclass
class SensitivityReport:
    first_order: dict
    pairwise: dict
    total_variance: float
    mc_samples: int

    def ranked_first_order(self) -> list[tuple[int, float]]:
        return sorted(self.first_order.items(), key=lambda kv: (-kv[1], kv[0]))

    def ranked_pairwise(self) -> list[tuple[tuple[int, int], float]]:
        return sorted(self.pairwise.items(), key=lambda kv: (-kv[1], kv[0]))

    def rows(self, names=None) -> list[dict]:
        """Ranked rows: ``order``, ``rank``, ``variables``, ``index``."""
        label = (lambda i: names[i]) if names else (lambda i: f"X{i + 1}")
        out = []
        for r, (i, s) in enumerate(self.ranked_first_order(), 1):
            out.append({"order": 1, "rank": r, "variables": label(i), "index": s})
        for r, ((i, j), s) in enumerate(self.ranked_pairwise(), 1):
            out.append({"order": 2, "rank": r, "variables": f"{label(i)},{label(j)}", "index": s})
        return out


def _moments(model: HdmrModel, dists, n: int, seed: int):
    """Streaming means and second moments of every component and the total."""
    keys = list(model.terms)
    n_batches = -(-n // BATCH)
    streams = spawn_streams(seed, n_batches)
    s1 = dict.fromkeys(keys + ["total"], 0.0)
    s2 = dict.fromkeys(keys + ["total"], 0.0)
    left = n
    # fixed batch-to-substream assignment keeps the estimate order independent
    for stream in streams:
        m = min(BATCH, left)
        left -= m
        X = sample_joint(dists, stream, m, model.space)
        comps = model.component_values(X)
        total = model.f0 + sum(comps.values()) if comps else np.full(m, model.f0)
        comps["total"] = total
        for k, v in comps.items():
            s1[k] += float(v.sum())
            s2[k] += float((v * v).sum())
    var = {}
    for k in s1:
        mean = s1[k] / n
        var[k] = max(s2[k] / n - mean * mean, 0.0) * n / (n - 1)
    return var


def sensitivity_indices(model: HdmrModel, dists, n: int = 100_000, seed: int = 0) -> SensitivityReport:
    if len(dists) != model.dim:
        raise ValueError("need one distribution per model input")
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} Monte Carlo samples")
    var = _moments(model, list(dists), n, seed)
    total = var.pop("total")
    first = {i: 0.0 for i in range(model.dim)}
    pairs = {}
    for i in range(model.dim):
        for j in range(i + 1, model.dim):
            pairs[(i, j)] = 0.0
    if total > 0.0:
        for key, v in var.items():
            if len(key) == 1:
                first[key[0]] = v / total
            else:
                pairs[key] = v / total
    return SensitivityReport(first, pairs, total, n)


def first_order_indices(model: HdmrModel, dists, n: int = 100_000, seed: int = 0) -> dict:
    return sensitivity_indices(model, dists, n, seed).first_order


def pairwise_indices(model: HdmrModel, dists, n: int = 100_000, seed: int = 0) -> dict:
    return sensitivity_indices(model, dists, n, seed).pairwise
