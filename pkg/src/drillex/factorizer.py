"""Factorised storage of the group-key matrix as sorted per-hierarchy chains.

The cross product of the per-hierarchy chains (tree expansion inside each
chain) is the logical row set of the drill-down query: one row per group key,
in lexicographic order.  Rows are never materialized; ``row_iter`` walks them
as deltas against the previous row.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .errors import EmptyDomain, UnknownAttribute

#: A row delta: attribute -> new value, only for attributes that changed.
RowDelta = dict[str, object]


@dataclass(frozen=True)
class FactorRelation:
    """One attribute's relation: a root enumeration or parent -> children.

    ``root_values`` is set for the first attribute of a hierarchy; deeper
    attributes carry ``children``, a sorted mapping from each parent value to
    its sorted child values.
    """

    attribute: str
    parent_attribute: str | None = None
    root_values: tuple = ()
    children: Mapping[object, tuple] | None = None

    @property
    def is_root(self) -> bool:
        return self.parent_attribute is None

    def child_values(self, parent: object) -> tuple:
        assert self.children is not None
        return self.children[parent]


@dataclass(frozen=True)
class HierarchyChain:
    """All relations of one hierarchy, shallowest attribute first."""

    hierarchy: str
    attributes: tuple[str, ...]
    relations: tuple[FactorRelation, ...]
    #: Depth-first value sequence per attribute (parents sorted, children
    #: sorted within each parent) — the order values appear along the rows.
    sequences: Mapping[str, tuple]
    #: For (deep, shallow) attribute pairs: index into the shallow sequence of
    #: each deep value's ancestor, aligned with the deep sequence.
    ancestor_index: Mapping[tuple[str, str], tuple[int, ...]]
    own_filter: tuple[tuple[str, object], ...]

    @property
    def leafcount(self) -> int:
        return len(self.sequences[self.attributes[-1]])

    def fingerprint(self) -> tuple:
        return (self.hierarchy, self.attributes, self.own_filter)


@dataclass(frozen=True)
class FactorStore:
    """One chain per hierarchy, in attribute order."""

    chains: tuple[HierarchyChain, ...]

    @property
    def attribute_order(self) -> tuple[str, ...]:
        return tuple(a for c in self.chains for a in c.attributes)

    @property
    def expansion_count(self) -> int:
        n = 1
        for chain in self.chains:
            n *= chain.leafcount
        return n

    def chain_of(self, attribute: str) -> HierarchyChain:
        for chain in self.chains:
            if attribute in chain.attributes:
                return chain
        raise UnknownAttribute(attribute)

    def sequence(self, attribute: str) -> tuple:
        return self.chain_of(attribute).sequences[attribute]

    def fingerprint(self) -> tuple:
        return tuple(c.fingerprint() for c in self.chains)


def _paths(rows: Sequence[Mapping[str, object]], attrs: tuple[str, ...],
           flt: Mapping[str, object]) -> list[tuple]:
    own = {a: v for a, v in flt.items() if a in attrs}
    seen = {
        tuple(row[a] for a in attrs)
        for row in rows
        if all(row[a] == v for a, v in own.items())
    }
    return sorted(seen)


def _chain_from_paths(hierarchy: str, attrs: tuple[str, ...],
                      paths: list[tuple],
                      own_filter: tuple[tuple[str, object], ...],
                      ) -> HierarchyChain:
    relations: list[FactorRelation] = []
    sequences: dict[str, tuple] = {}
    ancestor_index: dict[tuple[str, str], tuple[int, ...]] = {}
    root_values = tuple(sorted({p[0] for p in paths}))
    relations.append(FactorRelation(attrs[0], root_values=root_values))
    sequences[attrs[0]] = root_values
    for level in range(1, len(attrs)):
        children: dict[object, set] = {}
        for p in paths:
            children.setdefault(p[level - 1], set()).add(p[level])
        mapping = {
            parent: tuple(sorted(children[parent]))
            for parent in sequences[attrs[level - 1]]
        }
        relations.append(FactorRelation(
            attrs[level], parent_attribute=attrs[level - 1],
            children=mapping))
        sequences[attrs[level]] = tuple(
            v for parent in sequences[attrs[level - 1]]
            for v in mapping[parent])
    # Ancestor indexes for every (deep, shallow) pair, via path prefixes.
    # Any path containing a value works: its prefix is unique by the FD.
    for level in range(1, len(attrs)):
        deep_attr = attrs[level]
        by_value = {p[level]: p for p in paths}
        for shallow_level in range(level):
            shallow_attr = attrs[shallow_level]
            pos = {v: i for i, v in enumerate(sequences[shallow_attr])}
            ancestor_index[(deep_attr, shallow_attr)] = tuple(
                pos[by_value[v][shallow_level]]
                for v in sequences[deep_attr])
    return HierarchyChain(hierarchy, attrs, tuple(relations), sequences,
                          ancestor_index, own_filter)


def build(rows: Sequence[Mapping[str, object]],
          blocks: Sequence[tuple[str, tuple[str, ...]]],
          provenance_filter: Mapping[str, object] | None = None,
          ) -> FactorStore:
    """Build the store for the given per-hierarchy attribute blocks.

    Each chain is filtered only by the predicates on its own attributes, so
    the expansion enumerates every combination of per-hierarchy keys — groups
    with no matching fact rows included.
    """
    flt = dict(provenance_filter or {})
    chains = []
    for hierarchy, attrs in blocks:
        attrs = tuple(attrs)
        own = tuple(sorted(
            (a, v) for a, v in flt.items() if a in attrs))
        paths = _paths(rows, attrs, flt)
        if not paths:
            raise EmptyDomain(
                f"hierarchy {hierarchy!r} has no values under the filter")
        chains.append(_chain_from_paths(hierarchy, attrs, paths, own))
    return FactorStore(tuple(chains))


def relation(store: FactorStore, attribute: str) -> FactorRelation:
    """The relation backing ``attribute`` (root enumeration or parent map)."""
    chain = store.chain_of(attribute)
    return chain.relations[chain.attributes.index(attribute)]


def end_set(store: FactorStore, attribute: str) -> frozenset:
    """Values whose consumption advances the next-less-specific attribute.

    For a hierarchy's first attribute this is its last value; deeper down it
    is the last child of every parent.
    """
    rel = relation(store, attribute)
    if rel.is_root:
        return frozenset({rel.root_values[-1]}) if rel.root_values \
            else frozenset()
    assert rel.children is not None
    return frozenset(vals[-1] for vals in rel.children.values() if vals)


class _Cursor:
    """Iteration state for one attribute: its current list and position."""

    __slots__ = ("values", "pos")

    def __init__(self, values: tuple) -> None:
        self.values = values
        self.pos = 0

    @property
    def current(self) -> object:
        return self.values[self.pos]


def row_iter(store: FactorStore) -> Iterator[RowDelta]:
    """Yield the expansion rows as deltas, first row full.

    Advancing consumes the deepest attribute; whenever the consumed value is
    in the attribute's end set, the previous attribute advances too, and the
    consumer's cursor restarts (on the new parent's children when the previous
    attribute is its parent).
    """
    order = store.attribute_order
    if not order or store.expansion_count == 0:
        return
    rels = [relation(store, a) for a in order]
    ends = [end_set(store, a) for a in order]
    cursors: list[_Cursor] = []
    for rel in rels:
        if rel.is_root:
            cursors.append(_Cursor(rel.root_values))
        else:
            parent_cursor = cursors[-1]
            cursors.append(_Cursor(rel.child_values(parent_cursor.current)))

    def advance(i: int) -> None:
        old = cursors[i].current
        if old in ends[i] and i > 0:
            advance(i - 1)
            if rels[i].is_root:
                cursors[i].pos = 0
            else:
                cursors[i].values = rels[i].child_values(
                    cursors[i - 1].current)
                cursors[i].pos = 0
        else:
            cursors[i].pos += 1

    yield {a: c.current for a, c in zip(order, cursors)}
    last = len(order) - 1
    for _ in range(store.expansion_count - 1):
        before = [c.current for c in cursors]
        advance(last)
        yield {
            a: c.current
            for a, c, prev in zip(order, cursors, before)
            if c.current != prev
        }


def iter_keys(store: FactorStore) -> Iterator[tuple]:
    """Materialized group keys in row order (replays the delta stream)."""
    order = store.attribute_order
    current: dict[str, object] = {}
    for delta in row_iter(store):
        current.update(delta)
        yield tuple(current[a] for a in order)


def cartesian_keys(store: FactorStore) -> Iterator[tuple]:
    """Group keys via direct per-chain path products (no delta replay)."""
    per_chain = []
    for chain in store.chains:
        leaf = chain.attributes[-1]
        seq = chain.sequences[leaf]
        if len(chain.attributes) == 1:
            per_chain.append([(v,) for v in seq])
        else:
            anc = [
                chain.ancestor_index[(leaf, a)]
                for a in chain.attributes[:-1]
            ]
            seqs = [chain.sequences[a] for a in chain.attributes[:-1]]
            per_chain.append([
                tuple(s[ix[i]] for s, ix in zip(seqs, anc)) + (v,)
                for i, v in enumerate(seq)
            ])
    for combo in itertools.product(*per_chain):
        yield tuple(itertools.chain.from_iterable(combo))
