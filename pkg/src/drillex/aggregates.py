"""Decomposed count aggregates TOTAL/CNT/COF over a factor store.

Definitions (attribute order A_n .. A_1, left to right, A_1 most specific):

* ``TOTAL[A]``    — number of distinct sub-rows from ``A`` rightward.
* ``CNT[A][a]``   — distinct sub-rows from ``A`` rightward with value ``a``.
* ``COF[(Q,P)]``  — for ``Q`` deeper (later) than ``P``: distinct sub-rows
  from ``P`` rightward keyed by (value at Q, value at P).

Within one hierarchy these are chain walks shared bottom-up (deeper counts
feed shallower ones); across hierarchies COF factors into a CNT product and
is never materialized.  Drill-down changes one hierarchy's chain only, so all
other aggregates rescale by a single integer ratio.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import StaleAggs, UnknownAttribute
from .factorizer import FactorStore, HierarchyChain


@dataclass
class WorkCounter:
    """Counts join/chain steps; lets tests assert cache hits do no work."""

    steps: int = 0

    def add(self, amount: int) -> None:
        self.steps += amount


@dataclass(frozen=True)
class CountRelation:
    """A relation annotated with multiplicities, keyed by value tuples."""

    attrs: tuple[str, ...]
    counts: Mapping[tuple, int]


def join_sum(left: CountRelation, right: CountRelation,
             group_by: tuple[str, ...],
             counter: WorkCounter | None = None) -> CountRelation:
    """Natural-join two count relations, multiply counts, sum per group.

    Joins on the shared attributes, then marginalizes everything outside
    ``group_by`` by summing the count products in each partition.
    """
    shared = tuple(a for a in left.attrs if a in right.attrs)
    l_shared = [left.attrs.index(a) for a in shared]
    r_shared = [right.attrs.index(a) for a in shared]
    merged_attrs = left.attrs + tuple(
        a for a in right.attrs if a not in left.attrs)
    out_idx = [merged_attrs.index(a) for a in group_by]
    r_extra = [i for i, a in enumerate(right.attrs) if a not in left.attrs]

    by_key: dict[tuple, list[tuple[tuple, int]]] = {}
    for rkey, rc in right.counts.items():
        k = tuple(rkey[i] for i in r_shared)
        by_key.setdefault(k, []).append((rkey, rc))

    out: dict[tuple, int] = {}
    steps = 0
    for lkey, lc in left.counts.items():
        k = tuple(lkey[i] for i in l_shared)
        for rkey, rc in by_key.get(k, ()):
            merged = lkey + tuple(rkey[i] for i in r_extra)
            group = tuple(merged[i] for i in out_idx)
            out[group] = out.get(group, 0) + lc * rc
            steps += 1
    if counter is not None:
        counter.add(steps)
    return CountRelation(group_by, out)


@dataclass(frozen=True)
class HierarchyAggs:
    """Per-hierarchy aggregates, local to that hierarchy's chain.

    ``local_cnt[a][v]`` is the number of leaf descendants of ``v``;
    ``local_cof[(deep, shallow)]`` maps (descendant, ancestor) pairs to the
    descendant's leaf count; ``leafcount`` is the chain's expansion size.
    """

    hierarchy: str
    attrs: tuple[str, ...]
    leafcount: int
    local_cnt: Mapping[str, Mapping[object, int]]
    local_cof: Mapping[tuple[str, str], Mapping[tuple, int]]
    chain_fingerprint: tuple

    def cnt_vector(self, attribute: str, sequence: tuple) -> np.ndarray:
        counts = self.local_cnt[attribute]
        return np.array([counts[v] for v in sequence], dtype=np.int64)


def compute_hierarchy_aggs(chain: HierarchyChain,
                           counter: WorkCounter | None = None,
                           ) -> HierarchyAggs:
    """Walk one chain bottom-up, sharing deeper results with shallower ones."""
    attrs = chain.attributes
    leaf = attrs[-1]
    leaf_seq = chain.sequences[leaf]
    rel_cnt: dict[str, CountRelation] = {
        leaf: CountRelation((leaf,), {(v,): 1 for v in leaf_seq})
    }
    if counter is not None:
        counter.add(len(leaf_seq))
    edges: dict[int, CountRelation] = {}
    for level in range(len(attrs) - 1, 0, -1):
        parent, child = attrs[level - 1], attrs[level]
        rel = chain.relations[level]
        assert rel.children is not None
        edges[level] = CountRelation(
            (parent, child),
            {(p, c): 1 for p, cs in rel.children.items() for c in cs})
    # CNT bottom-up: each level marginalizes the level below.
    for level in range(len(attrs) - 1, 0, -1):
        parent = attrs[level - 1]
        rel_cnt[parent] = join_sum(
            edges[level], rel_cnt[attrs[level]], (parent,), counter)
    # COF: adjacent pairs from CNT, longer pairs by extending one edge.
    cof: dict[tuple[str, str], CountRelation] = {}
    for deep_level in range(1, len(attrs)):
        deep = attrs[deep_level]
        cof[(deep, attrs[deep_level - 1])] = join_sum(
            edges[deep_level], rel_cnt[deep],
            (deep, attrs[deep_level - 1]), counter)
        for shallow_level in range(deep_level - 2, -1, -1):
            shallow = attrs[shallow_level]
            cof[(deep, shallow)] = join_sum(
                edges[shallow_level + 1],
                cof[(deep, attrs[shallow_level + 1])],
                (deep, shallow), counter)
    local_cnt = {
        a: {k[0]: c for k, c in rel_cnt[a].counts.items()} for a in attrs
    }
    local_cof = {
        pair: dict(rel.counts) for pair, rel in cof.items()
    }
    return HierarchyAggs(chain.hierarchy, attrs, len(leaf_seq),
                         local_cnt, local_cof, chain.fingerprint())


class AggCache:
    """Reusable per-hierarchy aggregates keyed by the hierarchy's own state.

    The key is (hierarchy, depth, own-filter fingerprint): chains depend only
    on their own hierarchy's predicates, so a hit is bit-identical to
    recomputation regardless of what the other hierarchies are doing.
    """

    def __init__(self) -> None:
        self._entries: dict[tuple, HierarchyAggs] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key_for(chain: HierarchyChain) -> tuple:
        return (chain.hierarchy, len(chain.attributes), chain.own_filter)

    def get(self, key: tuple) -> HierarchyAggs | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: tuple, aggs: HierarchyAggs) -> None:
        with self._lock:
            self._entries[key] = aggs

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()


@dataclass(frozen=True)
class DecompAggs:
    """All decomposed aggregates for one store, in its attribute order."""

    order: tuple[str, ...]
    blocks: tuple[HierarchyAggs, ...]
    store_fingerprint: tuple
    _cnt_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        """Expansion row count (TOTAL of the first attribute)."""
        n = 1
        for b in self.blocks:
            n *= b.leafcount
        return n

    def _block_of(self, attribute: str) -> tuple[int, HierarchyAggs]:
        for i, b in enumerate(self.blocks):
            if attribute in b.attrs:
                return i, b
        raise UnknownAttribute(attribute)

    def suffix_product(self, block_index: int) -> int:
        """Product of leaf counts of all blocks after ``block_index``."""
        p = 1
        for b in self.blocks[block_index + 1:]:
            p *= b.leafcount
        return p

    def total(self, attribute: str) -> int:
        i, b = self._block_of(attribute)
        return b.leafcount * self.suffix_product(i)

    def cnt(self, attribute: str) -> dict[object, int]:
        if attribute in self._cnt_cache:
            return self._cnt_cache[attribute]
        i, b = self._block_of(attribute)
        mult = self.suffix_product(i)
        out = {v: c * mult for v, c in b.local_cnt[attribute].items()}
        self._cnt_cache[attribute] = out
        return out

    def cof(self, deep: str, shallow: str) -> Mapping[tuple, int]:
        """COF keyed (deep value, shallow value); factored across hierarchies."""
        di, db = self._block_of(deep)
        si, sb = self._block_of(shallow)
        if di == si:
            if db.attrs.index(deep) <= db.attrs.index(shallow):
                raise UnknownAttribute(
                    f"{deep!r} is not deeper than {shallow!r}")
            mult = self.suffix_product(di)
            return {
                key: c * mult
                for key, c in db.local_cof[(deep, shallow)].items()
            }
        if di < si:
            raise UnknownAttribute(f"{deep!r} is not deeper than {shallow!r}")
        return _FactoredCof(self.cnt(deep), self.cnt(shallow),
                            self.total(db.attrs[0]))


class _FactoredCof(Mapping):
    """Cross-hierarchy COF: CNT product over the deeper block's root TOTAL."""

    def __init__(self, cnt_deep: Mapping, cnt_shallow: Mapping,
                 total_deep_root: int) -> None:
        self._deep = cnt_deep
        self._shallow = cnt_shallow
        self._total = total_deep_root

    def __getitem__(self, key: tuple) -> int:
        a, b = key
        product = self._deep[a] * self._shallow[b]
        quotient, remainder = divmod(product, self._total)
        assert remainder == 0, "factored COF must be integral"
        return quotient

    def __iter__(self) -> Iterable[tuple]:
        for a in self._deep:
            for b in self._shallow:
                yield (a, b)

    def __len__(self) -> int:
        return len(self._deep) * len(self._shallow)


def compute_all(store: FactorStore, cache: AggCache | None = None,
                counter: WorkCounter | None = None) -> DecompAggs:
    """Compute every TOTAL/CNT and within-hierarchy COF for the store.

    With a cache, hierarchies keep their partial results across invocations;
    a hit contributes zero chain-walk steps to ``counter``.
    """
    blocks = []
    for chain in store.chains:
        key = AggCache.key_for(chain) if cache is not None else None
        block = cache.get(key) if cache is not None else None
        if block is None or block.chain_fingerprint != chain.fingerprint():
            block = compute_hierarchy_aggs(chain, counter)
            if cache is not None:
                cache.put(key, block)
        blocks.append(block)
    return DecompAggs(store.attribute_order, tuple(blocks),
                      store.fingerprint())


def drilldown_update(aggs: DecompAggs, store: FactorStore,
                     drilled_hierarchy: str, new_attribute: str,
                     cache: AggCache | None = None,
                     counter: WorkCounter | None = None) -> DecompAggs:
    """Update aggregates after one hierarchy gained its next attribute.

    Only the drilled hierarchy's chain is recomputed (or fetched from cache);
    every other block is carried over unchanged and rescaled implicitly via
    the suffix products, in constant time per aggregate.
    """
    new_chains = {c.hierarchy: c for c in store.chains}
    drilled_chain = new_chains.get(drilled_hierarchy)
    if drilled_chain is None:
        raise StaleAggs(f"store has no hierarchy {drilled_hierarchy!r}")
    if drilled_chain.attributes[-1] != new_attribute:
        raise StaleAggs(
            f"store's deepest attribute of {drilled_hierarchy!r} is "
            f"{drilled_chain.attributes[-1]!r}, not {new_attribute!r}")
    old_blocks = {b.hierarchy: b for b in aggs.blocks}
    for chain in store.chains:
        if chain.hierarchy == drilled_hierarchy:
            old = old_blocks.get(drilled_hierarchy)
            if old is not None and old.attrs != chain.attributes[:-1]:
                raise StaleAggs("aggregates predate a different drill state")
            continue
        old = old_blocks.get(chain.hierarchy)
        if old is None or old.chain_fingerprint != chain.fingerprint():
            raise StaleAggs(
                f"hierarchy {chain.hierarchy!r} changed outside the drill")
    blocks = []
    for chain in store.chains:
        if chain.hierarchy == drilled_hierarchy:
            key = AggCache.key_for(chain) if cache is not None else None
            block = cache.get(key) if cache is not None else None
            if block is None or block.chain_fingerprint != chain.fingerprint():
                block = compute_hierarchy_aggs(chain, counter)
                if cache is not None:
                    cache.put(key, block)
            blocks.append(block)
        else:
            blocks.append(old_blocks[chain.hierarchy])
    return DecompAggs(store.attribute_order, tuple(blocks),
                      store.fingerprint())
