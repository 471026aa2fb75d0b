"""Shared fixtures: random hierarchical instances with dense-oracle twins."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from drillex import factorizer, features
from drillex.aggregates import DecompAggs, compute_all
from drillex.factorizer import FactorStore
from drillex.features import FeatureMap, FeatureMatrixView

from oracles import cluster_slices, expansion_rows, hierarchy_paths, \
    materialize_oracle


@dataclass
class Instance:
    """A random factorised view plus its fully materialized twin."""

    rows: list
    blocks: list
    order: tuple
    store: FactorStore
    aggs: DecompAggs
    view: FeatureMatrixView
    columns: list
    x: np.ndarray
    y: np.ndarray
    include: np.ndarray
    expansion: list
    slices: list
    z_idx: list


def _random_hierarchy(rng: np.random.Generator, tag: str,
                      depth: int | None = None,
                      widths: list[int] | None = None):
    """Random parent->child tree; returns (attrs, full paths)."""
    if depth is None:
        depth = int(rng.integers(1, 4))
    attrs = [f"{tag}l{d}" for d in range(depth)]
    level = [f"{tag}l0v{j}" for j in range(
        widths[0] if widths else int(rng.integers(1, 4)))]
    paths = [(v,) for v in level]
    for d in range(1, depth):
        width = widths[d] if widths else int(
            rng.integers(len(level), min(6, 2 * len(level)) + 1))
        width = max(width, len(level))
        values = [f"{tag}l{d}v{j}" for j in range(width)]
        assignment = list(range(len(level)))  # every parent keeps a child
        assignment += list(rng.integers(0, len(level),
                                        size=width - len(level)))
        new_paths = []
        for value, parent_pos in zip(values, sorted(assignment)):
            for path in paths:
                if path[-1] == level[parent_pos]:
                    new_paths.append(path + (value,))
                    break
        paths = new_paths
        level = values
    return attrs, sorted(paths)


def make_instance(rng: np.random.Generator, *,
                  n_hierarchies: int | None = None,
                  depths: list[int] | None = None,
                  widths: list[list[int]] | None = None,
                  exclusions: bool = False) -> Instance:
    explicit = (n_hierarchies is not None or depths is not None
                or widths is not None)
    while True:
        inst = _draw_instance(rng, n_hierarchies, depths, widths, exclusions)
        if explicit:
            return inst
        # Reject degenerate draws: mixed-model fitting needs at least two
        # clusters and more (included) rows than feature columns, otherwise
        # the likelihood is unbounded and no estimator is well defined.
        if len(inst.slices) >= 2 and \
                int(inst.include.sum()) >= len(inst.view.maps) + 2:
            return inst


def _draw_instance(rng: np.random.Generator,
                   n_hierarchies: int | None,
                   depths: list[int] | None,
                   widths: list[list[int]] | None,
                   exclusions: bool) -> Instance:
    if n_hierarchies is None:
        n_hierarchies = int(rng.integers(1, 5))
    hiers = []
    for i in range(n_hierarchies):
        hiers.append(_random_hierarchy(
            rng, f"h{i}",
            depth=depths[i] if depths else None,
            widths=widths[i] if widths else None))
    blocks = [(f"h{i}", tuple(attrs)) for i, (attrs, _) in enumerate(hiers)]
    order = tuple(a for _, attrs in blocks for a in attrs)

    # Fact rows: cover every hierarchy path at least once, then add noise
    # rows and duplicates.
    path_lists = [paths for _, paths in hiers]
    most = max(len(p) for p in path_lists)
    combos = [tuple(p[i % len(p)] for p in path_lists) for i in range(most)]
    combos += [tuple(p[int(rng.integers(len(p)))] for p in path_lists)
               for _ in range(int(rng.integers(1, most + 2)))]
    rows = []
    for combo in combos:
        row = {}
        for (attrs, _), path in zip(hiers, combo):
            row.update(zip(attrs, path))
        rows.append(row)

    store = factorizer.build(rows, blocks)
    aggs = compute_all(store)
    oracle_paths = [hierarchy_paths(rows, attrs) for _, attrs in blocks]
    expansion = expansion_rows(oracle_paths)
    assert store.expansion_count == len(expansion)

    columns = []
    maps = []
    for attr in order:
        domain = sorted(set(store.sequence(attr)))
        n_maps = int(rng.integers(0, 3))
        for j in range(n_maps):
            mapping = {v: float(rng.normal()) for v in domain}
            columns.append((attr, mapping))
            maps.append(FeatureMap(attr, "custom", mapping,
                                   f"{attr}f{j}"))
    if not maps or rng.random() < 0.5:
        intercept = features.constant_feature(store)
        columns.insert(0, (order[0], intercept.mapping))
        maps.insert(0, intercept)

    target = {}
    excluded = set()
    for key in expansion:
        if exclusions and rng.random() < 0.15:
            target[key] = None
            excluded.add(key)
        else:
            target[key] = float(rng.normal())
    policy = "exclude" if exclusions else "zero"
    z_idx = sorted(rng.choice(len(maps), size=int(rng.integers(
        1, len(maps) + 1)), replace=False).tolist())
    view = features.build_view(store, maps, target, z_mask=z_idx,
                               empty_policy=policy)

    x = materialize_oracle(expansion, order, columns)
    y = np.array([0.0 if target[key] is None else target[key]
                  for key in expansion])
    include = np.array([key not in excluded for key in expansion])
    return Instance(rows, blocks, order, store, aggs, view, columns, x, y,
                    include, expansion, cluster_slices(expansion), z_idx)


@pytest.fixture(scope="session")
def demo_dataset(tmp_path_factory):
    from drillex.service.demo import write_demo
    from drillex.service.ingest import ingest

    config = write_demo(tmp_path_factory.mktemp("demo"))
    return ingest(config)
