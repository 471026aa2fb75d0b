"""Timing harness: factorised matrix operators vs the materialized route.

Instances use one attribute per hierarchy with a fixed domain width, so each
added hierarchy multiplies the expanded row count by the width while the
factorised representation only grows by one chain.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .. import factorizer, features, fmatrix
from ..aggregates import compute_all
from ..features import FeatureMap


@dataclass(frozen=True)
class BenchRow:
    """Seconds per operator at one (depth, width); dense includes expansion."""

    depth: int
    width: int
    rows: int
    materialize_s: float
    gram_s: float
    left_s: float
    right_s: float
    dense_gram_s: float


def _time(fn: Callable[[], object], repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _instance(depth: int, width: int, seed: int):
    attrs = [f"a{i}" for i in range(depth)]
    rows = [{a: f"v{j:02d}" for a in attrs} for j in range(width)]
    blocks = [(f"h{i}", (a,)) for i, a in enumerate(attrs)]
    store = factorizer.build(rows, blocks)
    aggs = compute_all(store)
    rng = np.random.default_rng(seed)
    maps = [features.constant_feature(store)]
    for a in attrs:
        domain = store.sequence(a)
        values = rng.normal(size=len(domain))
        maps.append(FeatureMap(a, "custom",
                               dict(zip(domain, map(float, values))), a))
    view = features.build_view(store, maps, {}, empty_policy="zero")
    return view, aggs


def run_bench(depths: Sequence[int] = (1, 2, 3, 4, 5), width: int = 10,
              seed: int = 0, repeats: int = 3) -> list[BenchRow]:
    """Time gram/left/right/materialize per depth; single-shot beyond 10^4 rows."""
    out = []
    for depth in depths:
        view, aggs = _instance(depth, width, seed)
        n, m = view.n, view.m
        rng = np.random.default_rng(seed + depth)
        a = rng.normal(size=n)
        b = rng.normal(size=m)
        reps = repeats if n <= 10_000 else 1
        gram_s = _time(lambda: fmatrix.gram(view, aggs), max(repeats, 3))
        left_s = _time(lambda: fmatrix.left_mul(a, view, aggs), reps)
        right_s = _time(lambda: fmatrix.right_mul(view, b), reps)
        mat_s = _time(lambda: fmatrix.materialize(view), reps)

        def dense() -> np.ndarray:
            x = fmatrix.materialize(view)
            return x.T @ x

        dense_s = _time(dense, reps)
        out.append(BenchRow(depth, width, n, mat_s, gram_s, left_s,
                            right_s, dense_s))
    return out
