"""Ranking candidate repairs across every hierarchy the view can drill into.

For each candidate hierarchy a mixed-effects model is trained on the full
dataset, one level deeper along that hierarchy, with the parallel group-by
combinations as clusters.  Each subgroup of the complained tuple is then
repaired to its model prediction, the complained aggregate is recomputed,
and subgroups are ranked by how well the repaired aggregate answers the
complaint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .. import factorizer, features, mlm
from ..aggregates import AggCache, DecompAggs, compute_all
from ..errors import AllEmpty, NoCandidates
from ..factorizer import FactorStore
from ..features import FeatureMap
from ..schema import DatasetSchema, ViewSpec, candidate_view, view_blocks, \
    view_order
from .stats import Complaint, StatBundle, bundle_from_moments, \
    complaint_score, group_bundles, propagate_repair

#: Builds one extra feature for a candidate's training table, or None to
#: skip; called with the training store, its attribute order, and the
#: per-group bundles over that order.
FeatureBuilder = Callable[
    [FactorStore, tuple[str, ...], Mapping[tuple, StatBundle]],
    FeatureMap | None]

_PRIMITIVES = {
    "COUNT": ("count",),
    "SUM": ("count", "mean"),
    "MEAN": ("count", "mean"),
    "STD": ("count", "mean", "sumsq"),
}


@dataclass(frozen=True)
class RepairCandidate:
    """One subgroup repair and the aggregate/score it produces."""

    hierarchy: str
    group: tuple
    actual: StatBundle
    repaired: StatBundle
    repaired_value: float
    score: float


@dataclass(frozen=True)
class HierarchyRanking:
    """Score-ordered repairs for one candidate drill-down hierarchy."""

    hierarchy: str
    attribute: str
    order: tuple[str, ...]
    candidates: tuple[RepairCandidate, ...]


@dataclass(frozen=True)
class Recommendation:
    """All per-hierarchy rankings plus the single best repair overall."""

    complaint: Complaint
    current_value: float | None
    rankings: tuple[HierarchyRanking, ...]
    best: RepairCandidate


def _target_dicts(bundles: Mapping[tuple, StatBundle],
                  primitive: str) -> dict[tuple, float | None]:
    out: dict[tuple, float | None] = {}
    for key, b in bundles.items():
        if primitive == "count":
            out[key] = float(b.count)
        elif primitive == "mean":
            out[key] = b.mean
        else:
            out[key] = b.sumsq
    return out


def _expansion_rows_per_value(aggs: DecompAggs,
                              attribute: str) -> dict[object, int]:
    mult = aggs.n // aggs.total(attribute)
    return {v: c * mult for v, c in aggs.cnt(attribute).items()}


def _feature_maps(store: FactorStore, order: tuple[str, ...],
                  aggs: DecompAggs, target: Mapping[tuple, float | None],
                  auxiliaries: Sequence[features.AuxiliarySpec],
                  extra: Iterable[FeatureMap]) -> list[FeatureMap]:
    """Intercept, per-attribute medians, joined auxiliaries, extras.

    An attribute's median feature is dropped when each of its values covers
    exactly one training group — there the feature restates the target and
    the model would learn nothing transferable.
    """
    observed = [v for v in target.values() if v is not None]
    fill = float(np.median(observed)) if observed else 0.0
    maps = [features.constant_feature(store)]
    for i, attr in enumerate(order):
        if all(c == 1 for c in _expansion_rows_per_value(aggs, attr).values()):
            continue
        domain = set(store.sequence(attr))
        maps.append(features.default_feature_map(
            attr, target, i, domain=domain, fill=fill))
    for spec in auxiliaries:
        if spec.join_attrs[0] in order:
            maps.append(features.auxiliary_feature_map(spec, store))
    maps.extend(extra)
    return maps


def _repaired_bundle(stat: str, actual: StatBundle,
                     preds: Mapping[str, float]) -> StatBundle:
    """Swap the model's predictions into the subgroup's bundle.

    Counts round to the nearest non-negative integer; statistics the model
    did not predict keep their observed values.
    """
    count = max(int(np.rint(preds["count"])), 0)
    if stat == "COUNT":
        return StatBundle(count, actual.mean if count else None,
                          actual.std if count >= 2 else None)
    mean = preds["mean"]
    if count == 0:
        return StatBundle(0)
    if stat in ("SUM", "MEAN"):
        return StatBundle(count, mean, actual.std if count >= 2 else None)
    return bundle_from_moments(count, count * mean, preds["sumsq"])


def rank(rows: Sequence[Mapping[str, object]], schema: DatasetSchema,
         view: ViewSpec, complaint: Complaint, k: int = 5, *,
         auxiliaries: Sequence[features.AuxiliarySpec] = (),
         feature_builders: Sequence[FeatureBuilder] = (),
         cache: AggCache | None = None,
         config: mlm.TrainConfig = mlm.TrainConfig()) -> Recommendation:
    """Rank subgroup repairs for ``complaint`` over all drillable hierarchies.

    Ties break by hierarchy declaration order, then lexicographic group key.
    """
    order_now = view_order(schema, view)
    if len(complaint.group) != len(order_now):
        raise ValueError(
            f"complaint group {complaint.group!r} does not match the "
            f"view's group-by {order_now}")
    measure = view.measure
    if complaint.stat != "COUNT" and measure is None:
        raise ValueError(f"{complaint.stat} complaints need a measure")

    view_bundles = group_bundles(rows, order_now, measure, view.filter)
    view_bundles.setdefault(complaint.group, StatBundle(0))
    current = view_bundles[complaint.group].value(complaint.stat)

    candidates = [
        h.name for h in schema.hierarchies
        if view.depth_of(h.name) < len(h.attributes)
    ]
    if not candidates:
        raise NoCandidates("every hierarchy is already at leaf level")

    scope = dict(view.filter)
    scope.update(zip(order_now, complaint.group))

    rankings = []
    for name in candidates:
        hierarchy = schema.hierarchy(name)
        attribute = hierarchy.attributes[view.depth_of(name)]
        deeper = candidate_view(schema, view, name)
        blocks = view_blocks(schema, deeper)
        order = tuple(a for _, attrs in blocks for a in attrs)

        train_store = factorizer.build(rows, blocks)
        train_aggs = compute_all(train_store, cache=cache)
        train_bundles = group_bundles(rows, order, measure)

        models: dict[str, mlm.FittedModel] = {}
        for primitive in _PRIMITIVES[complaint.stat]:
            target = _target_dicts(train_bundles, primitive)
            extra = [
                fm for fm in (b(train_store, order, train_bundles)
                              for b in feature_builders)
                if fm is not None and fm.attribute in order
            ]
            maps = _feature_maps(train_store, order, train_aggs, target,
                                 auxiliaries, extra)
            policy = "zero" if primitive == "count" else "exclude"
            fview = features.build_view(train_store, maps, target,
                                        empty_policy=policy)
            models[primitive] = mlm.fit(fview, config, aggs=train_aggs)

        scoped_store = factorizer.build(rows, blocks, scope)
        scoped_keys = list(factorizer.cartesian_keys(scoped_store))
        observed = group_bundles(rows, order, measure, scope)
        subgroups = {key: observed.get(key, StatBundle(0))
                     for key in scoped_keys}

        scored = []
        for key in scoped_keys:
            actual = subgroups[key]
            preds = {p: mlm.predict(m, key) for p, m in models.items()}
            repaired = _repaired_bundle(complaint.stat, actual, preds)
            try:
                value = propagate_repair(subgroups, key, repaired, complaint)
            except AllEmpty:
                continue
            scored.append(RepairCandidate(
                name, key, actual, repaired, value,
                complaint_score(value, complaint)))
        scored.sort(key=lambda c: (c.score, c.group))
        rankings.append(HierarchyRanking(name, attribute, order,
                                         tuple(scored[:k])))

    best = min((r.candidates[0] for r in rankings if r.candidates),
               key=lambda c: c.score)
    return Recommendation(complaint, current, tuple(rankings), best)
