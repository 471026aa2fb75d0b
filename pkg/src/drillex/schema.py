"""Hierarchy declarations, views, drill-down, and dependency validation.

A dataset is described by hierarchical dimensions (ordered attribute lists,
least to most specific, where each child value belongs to exactly one parent
value) plus numeric measure columns.  Views are group-by specifications over
hierarchy prefixes with an inherited conjunctive filter; drilling down extends
one hierarchy by one attribute and narrows the filter to the clicked group.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .errors import AtLeafLevel, SchemaError, UnknownHierarchy

STAT_KINDS = ("COUNT", "SUM", "MEAN", "STD")


@dataclass(frozen=True)
class Hierarchy:
    """One dimension: attribute names ordered least -> most specific."""

    name: str
    attributes: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.attributes:
            raise SchemaError(f"hierarchy {self.name!r} has no attributes")
        if len(set(self.attributes)) != len(self.attributes):
            raise SchemaError(f"hierarchy {self.name!r} repeats an attribute")


@dataclass(frozen=True)
class DatasetSchema:
    """All hierarchies plus measure columns; the two sets are disjoint."""

    hierarchies: tuple[Hierarchy, ...]
    measures: tuple[str, ...]

    def __post_init__(self) -> None:
        attrs = [a for h in self.hierarchies for a in h.attributes]
        if len(set(attrs)) != len(attrs):
            raise SchemaError("attribute names repeat across hierarchies")
        clash = set(attrs) & set(self.measures)
        if clash:
            raise SchemaError(f"attributes double as measures: {sorted(clash)}")
        names = [h.name for h in self.hierarchies]
        if len(set(names)) != len(names):
            raise SchemaError("hierarchy names repeat")

    def hierarchy(self, name: str) -> Hierarchy:
        for h in self.hierarchies:
            if h.name == name:
                return h
        raise UnknownHierarchy(name)

    def hierarchy_of(self, attribute: str) -> Hierarchy:
        for h in self.hierarchies:
            if attribute in h.attributes:
                return h
        raise UnknownHierarchy(f"no hierarchy owns attribute {attribute!r}")


@dataclass(frozen=True)
class ViewSpec:
    """A group-by view: per-hierarchy depths, filter, and statistics.

    ``groupby`` maps hierarchy name -> depth (number of leading attributes
    included).  ``drilled`` names the hierarchy whose block is ordered last;
    ``provenance`` is the conjunction of attribute=value predicates inherited
    from prior drill-downs.
    """

    groupby: tuple[tuple[str, int], ...] = ()
    drilled: str | None = None
    provenance: tuple[tuple[str, object], ...] = ()
    aggregates: tuple[str, ...] = ("COUNT",)
    measure: str | None = None

    def __post_init__(self) -> None:
        for kind in self.aggregates:
            if kind not in STAT_KINDS:
                raise SchemaError(f"unknown statistic kind {kind!r}")

    def depth_of(self, hierarchy: str) -> int:
        for name, depth in self.groupby:
            if name == hierarchy:
                return depth
        return 0

    @property
    def filter(self) -> dict[str, object]:
        return dict(self.provenance)


@dataclass(frozen=True)
class FDViolation:
    """A child value observed under more than one parent value."""

    attribute: str
    child_value: object
    conflicting_parents: tuple[object, ...]


@dataclass(frozen=True)
class NullValue:
    """A hierarchy attribute with a missing value (rejected at ingest)."""

    attribute: str
    row_index: int


def validate(rows: Sequence[Mapping[str, object]],
             schema: DatasetSchema) -> list[FDViolation | NullValue]:
    """Check the functional dependencies implied by every hierarchy.

    Returns an empty list when each child value maps to exactly one parent
    value at every adjacent level and no hierarchy value is missing.
    """
    problems: list[FDViolation | NullValue] = []
    hier_attrs = [a for h in schema.hierarchies for a in h.attributes]
    for i, row in enumerate(rows):
        for attr in hier_attrs:
            value = row.get(attr)
            if value is None or value != value or value == "":
                problems.append(NullValue(attr, i))
    if problems:
        return problems
    for h in schema.hierarchies:
        for parent, child in zip(h.attributes, h.attributes[1:]):
            parents: dict[object, set[object]] = {}
            for row in rows:
                parents.setdefault(row[child], set()).add(row[parent])
            for child_value, seen in sorted(parents.items(),
                                            key=lambda kv: str(kv[0])):
                if len(seen) > 1:
                    problems.append(FDViolation(
                        child, child_value,
                        tuple(sorted(seen, key=str))))
    return problems


def attribute_order(schema: DatasetSchema,
                    drilldown_hierarchy: str) -> tuple[str, ...]:
    """Full attribute order: declaration-order blocks, drilled block last."""
    drilled = schema.hierarchy(drilldown_hierarchy)
    order: list[str] = []
    for h in schema.hierarchies:
        if h.name != drilled.name:
            order.extend(h.attributes)
    order.extend(drilled.attributes)
    return tuple(order)


def view_blocks(schema: DatasetSchema,
                view: ViewSpec) -> list[tuple[str, tuple[str, ...]]]:
    """Per-hierarchy (name, attribute-prefix) blocks in view order.

    Non-drilled hierarchies keep schema declaration order; the drilled
    hierarchy's block comes last.  Hierarchies at depth 0 are omitted.
    """
    blocks: list[tuple[str, tuple[str, ...]]] = []
    tail: list[tuple[str, tuple[str, ...]]] = []
    for h in schema.hierarchies:
        depth = view.depth_of(h.name)
        if depth == 0:
            continue
        block = (h.name, h.attributes[:depth])
        if h.name == view.drilled:
            tail.append(block)
        else:
            blocks.append(block)
    return blocks + tail


def view_order(schema: DatasetSchema, view: ViewSpec) -> tuple[str, ...]:
    """Flat attribute order of the view's group-by columns."""
    return tuple(a for _, attrs in view_blocks(schema, view) for a in attrs)


def drilldown(schema: DatasetSchema, view: ViewSpec,
              group_key: Mapping[str, object], hierarchy: str) -> ViewSpec:
    """Advance ``hierarchy`` one attribute deeper, scoped to ``group_key``.

    The new view's filter inherits the old one plus every group-by value of
    the clicked tuple, so subsequent statistics cover only that tuple's rows.
    """
    h = schema.hierarchy(hierarchy)
    depth = view.depth_of(h.name)
    if depth >= len(h.attributes):
        raise AtLeafLevel(f"hierarchy {hierarchy!r} is fully expanded")
    current_attrs = view_order(schema, view)
    missing = [a for a in current_attrs if a not in group_key]
    if missing:
        raise SchemaError(f"group key missing attributes: {missing}")
    new_filter = dict(view.provenance)
    for attr in current_attrs:
        new_filter[attr] = group_key[attr]
    groupby = dict(view.groupby)
    groupby[h.name] = depth + 1
    ordered = tuple(
        (g.name, groupby[g.name]) for g in schema.hierarchies
        if g.name in groupby)
    return replace(view, groupby=ordered, drilled=h.name,
                   provenance=tuple(sorted(new_filter.items(),
                                           key=lambda kv: kv[0])))


def candidate_view(schema: DatasetSchema, view: ViewSpec,
                   hierarchy: str) -> ViewSpec:
    """The view one level deeper along ``hierarchy`` with an unchanged filter.

    Used for model training, where the deeper view spans all parallel groups
    rather than a single clicked tuple.
    """
    h = schema.hierarchy(hierarchy)
    depth = view.depth_of(h.name)
    if depth >= len(h.attributes):
        raise AtLeafLevel(f"hierarchy {hierarchy!r} is fully expanded")
    groupby = dict(view.groupby)
    groupby[h.name] = depth + 1
    ordered = tuple(
        (g.name, groupby[g.name]) for g in schema.hierarchies
        if g.name in groupby)
    return replace(view, groupby=ordered, drilled=h.name)
