"""Per-attribute value -> feature maps and the logical feature matrix view.

A feature map replaces each attribute value with one real number; the feature
matrix is the attribute matrix with values mapped, and is never materialized
outside the dense test oracle.  Targets ``y`` live in row-iterator order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import LengthMismatch, NoGroups, NonFinite
from .factorizer import FactorStore, cartesian_keys

FEATURE_KINDS = ("default", "auxiliary", "custom")


@dataclass(frozen=True)
class FeatureMap:
    """One feature column: an attribute and a total value -> real mapping."""

    attribute: str
    kind: str
    mapping: Mapping[object, float]
    name: str = ""

    def vector(self, sequence: tuple) -> np.ndarray:
        try:
            return np.array([self.mapping[v] for v in sequence], dtype=float)
        except KeyError as exc:
            raise LengthMismatch(
                f"feature {self.name or self.attribute!r} lacks a value for "
                f"{exc.args[0]!r}") from None


@dataclass(frozen=True)
class AuxiliarySpec:
    """An auxiliary table: rows, a join attribute key, a measure column."""

    name: str
    rows: tuple[Mapping[str, object], ...]
    join_attrs: tuple[str, ...]
    measure: str

    def __post_init__(self) -> None:
        if len(self.join_attrs) != 1:
            raise LengthMismatch(
                "auxiliary joins use exactly one join attribute")
        keys = [tuple(r[a] for a in self.join_attrs) for r in self.rows]
        if len(set(keys)) != len(keys):
            raise LengthMismatch(
                f"auxiliary {self.name!r}: join attributes are not a key")


def center_scale(mapping: Mapping[object, float]) -> dict[object, float]:
    """Center to mean 0 and scale to sample std 1 over the domain values."""
    values = np.array(list(mapping.values()), dtype=float)
    mean = float(values.mean()) if len(values) else 0.0
    std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    if std <= 0.0:
        return {k: 0.0 for k in mapping}
    return {k: (v - mean) / std for k, v in mapping.items()}


def default_feature_map(attribute: str,
                        group_stats: Mapping[tuple, float],
                        attr_index: int,
                        domain: Iterable | None = None,
                        fill: float | None = None) -> FeatureMap:
    """Median of the target statistic over the groups sharing each value.

    ``group_stats`` maps full group keys to the statistic being modeled;
    ``attr_index`` locates the attribute inside those keys.  Domain values
    with no groups raise ``NoGroups`` unless ``fill`` provides an imputation.
    """
    per_value: dict[object, list[float]] = {}
    for key, stat in group_stats.items():
        if stat is None:
            continue
        per_value.setdefault(key[attr_index], []).append(float(stat))
    mapping: dict[object, float] = {}
    values = per_value.keys() if domain is None else domain
    for v in values:
        stats = per_value.get(v)
        if not stats:
            if fill is None:
                raise NoGroups(
                    f"value {v!r} of {attribute!r} has no groups")
            mapping[v] = fill
        else:
            mapping[v] = float(np.median(stats))
    return FeatureMap(attribute, "default", mapping, f"median[{attribute}]")


def auxiliary_feature_map(spec: AuxiliarySpec,
                          store: FactorStore) -> FeatureMap:
    """Join the auxiliary measure on its key attribute, centered and scaled.

    Domain values missing from the auxiliary table take the table's global
    median before normalization.
    """
    attr = spec.join_attrs[0]
    sequence = store.sequence(attr)
    lookup = {
        row[attr]: float(row[spec.measure]) for row in spec.rows
    }
    fallback = float(np.median(list(lookup.values()))) if lookup else 0.0
    raw = {v: lookup.get(v, fallback) for v in sequence}
    return FeatureMap(attr, "auxiliary", center_scale(raw),
                      f"aux[{spec.name}.{spec.measure}]")


def custom_feature(attribute: str, fn: Callable[[object, Mapping], float],
                   domain: Iterable, stats: Mapping | None = None,
                   name: str = "") -> FeatureMap:
    """Apply ``fn(value, stats)`` across the domain; reject non-finite output."""
    mapping = {}
    for v in domain:
        out = float(fn(v, stats or {}))
        if not math.isfinite(out):
            raise NonFinite(f"feature fn returned {out!r} at {v!r}")
        mapping[v] = out
    return FeatureMap(attribute, "custom", mapping,
                      name or f"custom[{attribute}]")


def constant_feature(store: FactorStore, value: float = 1.0) -> FeatureMap:
    """A constant column (an intercept), bound to the first attribute."""
    attr = store.attribute_order[0]
    return custom_feature(attr, lambda _v, _s: value, store.sequence(attr),
                          name="intercept")


@dataclass(frozen=True)
class FeatureMatrixView:
    """The logical n×m feature matrix: store + ordered maps + targets.

    ``include`` marks rows that participate in training (empty groups may be
    excluded); excluded rows keep y = 0.  ``z_mask`` selects the random-effect
    columns.
    """

    store: FactorStore
    maps: tuple[FeatureMap, ...]
    y: np.ndarray
    z_mask: tuple[int, ...]
    include: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.store.expansion_count

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(m.name or m.attribute for m in self.maps)

    def included_count(self) -> int:
        if self.include is None:
            return self.n
        return int(self.include.sum())


def build_view(store: FactorStore, feature_maps: Sequence[FeatureMap],
               target_stats: Mapping[tuple, float | None],
               z_mask: Sequence[int] | None = None,
               empty_policy: str = "zero") -> FeatureMatrixView:
    """Assemble the logical feature matrix over ``store``.

    Columns follow attribute order (stable within one attribute); ``y`` holds
    the per-group target in row-iterator order.  Groups whose target is
    missing or None follow ``empty_policy``: ``"zero"`` keeps them with y = 0,
    ``"exclude"`` zeroes y and drops them from training.
    """
    if not feature_maps:
        raise LengthMismatch("at least one feature map is required")
    order = store.attribute_order
    positions = {a: i for i, a in enumerate(order)}
    for fmap in feature_maps:
        if fmap.attribute not in positions:
            raise LengthMismatch(
                f"feature attribute {fmap.attribute!r} not in the store")
        fmap.vector(store.sequence(fmap.attribute))  # totality check
    maps = tuple(sorted(feature_maps, key=lambda m: positions[m.attribute]))
    if empty_policy not in ("zero", "exclude"):
        raise ValueError(f"unknown empty policy {empty_policy!r}")

    n = store.expansion_count
    y = np.zeros(n)
    include = np.ones(n, dtype=bool)
    missing = False
    for i, key in enumerate(cartesian_keys(store)):
        stat = target_stats.get(key)
        if stat is None:
            missing = True
            include[i] = empty_policy == "zero"
        else:
            y[i] = float(stat)
    if z_mask is None:
        z_idx = tuple(range(len(maps)))
    else:
        z_idx = tuple(sorted(set(int(i) for i in z_mask)))
        if z_idx and (z_idx[0] < 0 or z_idx[-1] >= len(maps)):
            raise LengthMismatch("z mask indexes outside the columns")
    return FeatureMatrixView(
        store, maps, y, z_idx,
        include if (missing and empty_policy == "exclude") else None)
