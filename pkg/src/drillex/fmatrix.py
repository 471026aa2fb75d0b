"""Matrix operations over the factorised feature matrix.

The feature matrix X (n×m) exists only logically.  The gram matrix XᵀX comes
straight from the decomposed counts; A·X walks each column's replication
pattern with prefix sums over A's rows; X·B replays the row iterator and
updates dot products incrementally.  Per-cluster variants yield one cluster
(a contiguous row range sharing every attribute but the deepest) at a time
into a reused buffer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .aggregates import DecompAggs
from .errors import BudgetExceeded, ShapeMismatch
from .features import FeatureMatrixView
from .factorizer import row_iter


@dataclass(frozen=True)
class _Column:
    index: int
    attribute: str
    block: int
    f: np.ndarray  # feature values aligned with the attribute's sequence


def _columns(view: FeatureMatrixView, aggs: DecompAggs) -> list[_Column]:
    block_of = {}
    for bi, block in enumerate(aggs.blocks):
        for a in block.attrs:
            block_of[a] = bi
    cols = []
    for j, fmap in enumerate(view.maps):
        seq = view.store.sequence(fmap.attribute)
        cols.append(_Column(j, fmap.attribute, block_of[fmap.attribute],
                            fmap.vector(seq)))
    return cols


def gram(view: FeatureMatrixView, aggs: DecompAggs) -> np.ndarray:
    """XᵀX assembled from CNT/COF; only the upper triangle is computed.

    Every cell is a count-weighted sum of feature products: the counts say how
    often each value (or value pair) repeats across the expansion.
    """
    store = view.store
    n = aggs.n
    cols = _columns(view, aggs)
    ld = {
        c.attribute: aggs.blocks[c.block].cnt_vector(
            c.attribute, store.sequence(c.attribute))
        for c in cols
    }
    # Per-column local weighted sums Σ ld·f, shared across cross-block cells.
    s1 = [float(ld[c.attribute] @ c.f) for c in cols]
    attr_pos = {a: i for i, a in enumerate(store.attribute_order)}
    out = np.empty((len(cols), len(cols)))
    for j, cj in enumerate(cols):
        for k in range(j, len(cols)):
            ck = cols[k]
            # Orient the pair: p shallower (earlier) than q.
            p, q = (cj, ck) if attr_pos[cj.attribute] <= \
                attr_pos[ck.attribute] else (ck, cj)
            if p.attribute == q.attribute:
                lc = aggs.blocks[p.block].leafcount
                cell = (n // lc) * float(
                    (ld[p.attribute] * p.f) @ q.f)
            elif p.block == q.block:
                lc = aggs.blocks[p.block].leafcount
                anc = store.chain_of(q.attribute).ancestor_index[
                    (q.attribute, p.attribute)]
                cell = (n // lc) * float(
                    (ld[q.attribute] * q.f) @ p.f[np.array(anc)])
            else:
                lc_p = aggs.blocks[p.block].leafcount
                lc_q = aggs.blocks[q.block].leafcount
                cell = (n // (lc_p * lc_q)) * s1[p.index] * s1[q.index]
            out[j, k] = cell
            out[k, j] = cell
    return out


def left_mul(a: np.ndarray, view: FeatureMatrixView,
             aggs: DecompAggs) -> np.ndarray:
    """A·X via prefix sums over A's rows.

    Each column is a repeating pattern: the attribute's values in relation
    order, each spanning CNT consecutive rows, the whole block repeated once
    per combination of the earlier hierarchies.  A prefix sum turns every
    span into one subtraction.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = aggs.n
    if a.shape[1] != n:
        raise ShapeMismatch(f"operand width {a.shape[1]} != n {n}")
    cols = _columns(view, aggs)
    out = np.empty((a.shape[0], len(cols)))
    if a.shape[0] == 0:
        return out
    prefix = np.zeros((a.shape[0], n + 1))
    np.cumsum(a, axis=1, out=prefix[:, 1:])
    for c in cols:
        block = aggs.blocks[c.block]
        spans = block.cnt_vector(c.attribute,
                                 view.store.sequence(c.attribute))
        spans = spans * aggs.suffix_product(c.block)
        period = block.leafcount * aggs.suffix_product(c.block)
        reps = n // period
        starts = np.concatenate(([0], np.cumsum(spans)[:-1]))
        all_starts = (starts[None, :] +
                      period * np.arange(reps)[:, None]).ravel()
        all_ends = all_starts + np.tile(spans, reps)
        sums = prefix[:, all_ends] - prefix[:, all_starts]
        per_value = sums.reshape(a.shape[0], reps, len(spans)).sum(axis=1)
        out[:, c.index] = per_value @ c.f
    return out


def _attr_contributions(view: FeatureMatrixView,
                        b: np.ndarray) -> dict[str, dict[object, np.ndarray]]:
    """Per attribute: value -> that attribute's additive share of X·B rows."""
    by_attr: dict[str, list[int]] = {}
    for j, fmap in enumerate(view.maps):
        by_attr.setdefault(fmap.attribute, []).append(j)
    contrib: dict[str, dict[object, np.ndarray]] = {}
    for attr, idxs in by_attr.items():
        seq = view.store.sequence(attr)
        f = np.stack([view.maps[j].vector(seq) for j in idxs], axis=1)
        rows = f @ b[idxs, :]
        contrib[attr] = {v: rows[i] for i, v in enumerate(seq)}
    return contrib


def right_mul(view: FeatureMatrixView, b: np.ndarray,
              refresh_every: int = 1024) -> np.ndarray:
    """X·B with incremental per-row updates driven by the row deltas.

    Row k's dot products reuse row k−1's, subtracting the old and adding the
    new contribution of exactly the attributes that changed.  Every
    ``refresh_every`` rows the accumulator is rebuilt from scratch to stop
    floating-point drift.  A 1-D operand returns a 1-D result, mirroring
    numpy's matmul convention.
    """
    b = np.asarray(b, dtype=float)
    single = b.ndim == 1
    if single:
        b = b[:, None]
    if b.shape[0] != view.m:
        raise ShapeMismatch(f"operand height {b.shape[0]} != m {view.m}")
    contrib = _attr_contributions(view, b)
    out = np.empty((view.n, b.shape[1]))
    current: dict[str, object] = {}
    dot = np.zeros(b.shape[1])
    for i, delta in enumerate(row_iter(view.store)):
        if i % refresh_every == 0 and i > 0:
            for attr, value in delta.items():
                if attr in contrib:
                    current[attr] = value
            dot = sum((contrib[a][v] for a, v in current.items()),
                      np.zeros(b.shape[1]))
        else:
            for attr, value in delta.items():
                if attr not in contrib:
                    continue
                old = current.get(attr)
                if old is not None:
                    dot = dot - contrib[attr][old]
                dot = dot + contrib[attr][value]
                current[attr] = value
        out[i] = dot
    return out[:, 0] if single else out


def materialize(view: FeatureMatrixView,
                budget: int = 100_000_000) -> np.ndarray:
    """Dense n×m expansion (test oracle / benchmark subject only)."""
    n, m = view.n, view.m
    if n * m > budget:
        raise BudgetExceeded(f"{n}×{m} exceeds budget {budget}")
    by_attr: dict[str, list[int]] = {}
    for j, fmap in enumerate(view.maps):
        by_attr.setdefault(fmap.attribute, []).append(j)
    lookup: dict[str, dict[object, np.ndarray]] = {}
    for attr, idxs in by_attr.items():
        seq = view.store.sequence(attr)
        f = np.stack([view.maps[j].vector(seq) for j in idxs], axis=1)
        lookup[attr] = {v: f[i] for i, v in enumerate(seq)}
    cols = {attr: np.array(idxs) for attr, idxs in by_attr.items()}
    out = np.empty((n, m))
    row = np.empty(m)
    for i, delta in enumerate(row_iter(view.store)):
        for attr, value in delta.items():
            if attr in cols:
                row[cols[attr]] = lookup[attr][value]
        out[i] = row
    return out


# ---------------------------------------------------------------------------
# Cluster iterators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClusterLayout:
    """Contiguous row ranges sharing every attribute except the deepest."""

    intra_attr: str
    inter_attrs: tuple[str, ...]
    keys: tuple[tuple, ...]
    starts: np.ndarray
    sizes: np.ndarray
    children: tuple[tuple, ...]

    @property
    def count(self) -> int:
        return len(self.keys)

    def slice_of(self, i: int) -> slice:
        return slice(int(self.starts[i]), int(self.starts[i] + self.sizes[i]))

    def cluster_index(self) -> dict[tuple, int]:
        return {key: i for i, key in enumerate(self.keys)}


def _chain_paths(chain) -> list[tuple]:
    """Full root-to-leaf paths of one chain, in leaf-sequence order."""
    leaf = chain.attributes[-1]
    seq = chain.sequences[leaf]
    if len(chain.attributes) == 1:
        return [(v,) for v in seq]
    shallow = chain.attributes[:-1]
    seqs = [chain.sequences[a] for a in shallow]
    ancs = [chain.ancestor_index[(leaf, a)] for a in shallow]
    return [
        tuple(s[ix[i]] for s, ix in zip(seqs, ancs)) + (v,)
        for i, v in enumerate(seq)
    ]


def cluster_layout(view: FeatureMatrixView) -> ClusterLayout:
    store = view.store
    last = store.chains[-1]
    intra = last.attributes[-1]
    inter = tuple(a for a in store.attribute_order if a != intra)
    if len(last.attributes) >= 2:
        parent_rel = last.relations[-1]
        assert parent_rel.children is not None
        parent_paths = _chain_paths_at_parent(last)
        tail = [(path, parent_rel.child_values(path[-1]))
                for path in parent_paths]
    else:
        tail = [((), last.sequences[intra])]
    heads = [_chain_paths(c) for c in store.chains[:-1]]
    keys: list[tuple] = []
    children: list[tuple] = []
    for combo in itertools.product(*heads, tail):
        head, (parent_path, kids) = combo[:-1], combo[-1]
        keys.append(tuple(itertools.chain(*head, parent_path)))
        children.append(tuple(kids))
    sizes = np.array([len(c) for c in children], dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1])) \
        if len(sizes) else np.zeros(0, dtype=np.int64)
    return ClusterLayout(intra, inter, tuple(keys), starts, sizes,
                         tuple(children))


def _chain_paths_at_parent(chain) -> list[tuple]:
    """Paths down to the next-to-last attribute, in sequence order."""
    parent_attr = chain.attributes[-2]
    seq = chain.sequences[parent_attr]
    if len(chain.attributes) == 2:
        return [(v,) for v in seq]
    shallow = chain.attributes[:-2]
    seqs = [chain.sequences[a] for a in shallow]
    ancs = [chain.ancestor_index[(parent_attr, a)] for a in shallow]
    return [
        tuple(s[ix[i]] for s, ix in zip(seqs, ancs)) + (v,)
        for i, v in enumerate(seq)
    ]


class _ClusterOps:
    """Shared machinery: per-cluster inter values and intra feature blocks."""

    def __init__(self, view: FeatureMatrixView,
                 cols: Sequence[int] | None = None,
                 layout: ClusterLayout | None = None) -> None:
        self.view = view
        self.layout = layout or cluster_layout(view)
        self.cols = tuple(cols) if cols is not None \
            else tuple(range(view.m))
        self.intra_pos = [i for i, j in enumerate(self.cols)
                          if view.maps[j].attribute == self.layout.intra_attr]
        self.inter_pos = [i for i, j in enumerate(self.cols)
                          if i not in set(self.intra_pos)]
        key_slot = {a: i for i, a in enumerate(self.layout.inter_attrs)}
        self.inter_slot = [
            key_slot[view.maps[self.cols[i]].attribute]
            for i in self.inter_pos
        ]
        self._fc_cache: dict[tuple, np.ndarray] = {}

    def u_vector(self, cluster: int, out: np.ndarray) -> np.ndarray:
        key = self.layout.keys[cluster]
        out[:] = 0.0
        for pos, slot in zip(self.inter_pos, self.inter_slot):
            fmap = self.view.maps[self.cols[pos]]
            out[pos] = fmap.mapping[key[slot]]
        return out

    def intra_block(self, cluster: int) -> np.ndarray:
        kids = self.layout.children[cluster]
        cached = self._fc_cache.get(kids)
        if cached is None:
            cached = np.stack([
                self.view.maps[self.cols[i]].vector(kids)
                for i in self.intra_pos
            ], axis=1) if self.intra_pos else np.zeros((len(kids), 0))
            self._fc_cache[kids] = cached
        return cached


def cluster_gram_iter(view: FeatureMatrixView,
                      cols: Sequence[int] | None = None,
                      buffer: np.ndarray | None = None,
                      layout: ClusterLayout | None = None,
                      ) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (cluster id, XᵢᵀXᵢ) into one reused buffer.

    The yielded matrix is overwritten by the next step; callers needing to
    keep it must copy.  Intra-attribute sums are shared between clusters that
    expand the same parent.
    """
    ops = _ClusterOps(view, cols, layout)
    mm = len(ops.cols)
    if buffer is None:
        buffer = np.empty((mm, mm))
    elif buffer.shape != (mm, mm):
        raise ShapeMismatch(f"buffer must be {(mm, mm)}")
    u = np.empty(mm)
    sq_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
    for i in range(ops.layout.count):
        ops.u_vector(i, u)
        kids = ops.layout.children[i]
        cached = sq_cache.get(kids)
        if cached is None:
            fc = ops.intra_block(i)
            cached = (fc.sum(axis=0), fc.T @ fc)
            sq_cache[kids] = cached
        s, q = cached
        n_i = len(kids)
        np.multiply.outer(u, u, out=buffer)
        buffer *= n_i
        if ops.intra_pos:
            cross = np.outer(u[ops.inter_pos], s)
            buffer[np.ix_(ops.inter_pos, ops.intra_pos)] = cross
            buffer[np.ix_(ops.intra_pos, ops.inter_pos)] = cross.T
            buffer[np.ix_(ops.intra_pos, ops.intra_pos)] = q
        yield i, buffer


def cluster_left_iter(view: FeatureMatrixView,
                      rows: Iterable[np.ndarray],
                      cols: Sequence[int] | None = None,
                      buffer: np.ndarray | None = None,
                      layout: ClusterLayout | None = None,
                      ) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (cluster id, Dᵢ·Xᵢ) per cluster into one reused buffer.

    Inter-cluster columns reduce to (Σ Dᵢ)·u computed once per cluster; intra
    columns take one small matrix product against the children's features.
    """
    ops = _ClusterOps(view, cols, layout)
    mm = len(ops.cols)
    if buffer is None:
        buffer = np.empty(mm)
    elif buffer.shape != (mm,):
        raise ShapeMismatch(f"buffer must be ({mm},)")
    u = np.empty(mm)
    for i, d in zip(range(ops.layout.count), rows):
        d = np.asarray(d, dtype=float)
        if d.shape != (int(ops.layout.sizes[i]),):
            raise ShapeMismatch(
                f"cluster {i} operand has shape {d.shape}, "
                f"expected ({int(ops.layout.sizes[i])},)")
        ops.u_vector(i, u)
        np.multiply(u, float(d.sum()), out=buffer)
        if ops.intra_pos:
            buffer[ops.intra_pos] = d @ ops.intra_block(i)
        yield i, buffer


def cluster_right_iter(view: FeatureMatrixView,
                       columns: Iterable[np.ndarray],
                       cols: Sequence[int] | None = None,
                       layout: ClusterLayout | None = None,
                       ) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (cluster id, Xᵢ·Cᵢ) per cluster into one reused buffer.

    The inter-cluster part of each row's dot product is one shared scalar
    ("base"); rows differ only through the deepest attribute's features.
    """
    ops = _ClusterOps(view, cols, layout)
    mm = len(ops.cols)
    max_rows = int(ops.layout.sizes.max()) if ops.layout.count else 0
    buffer = np.empty(max_rows)
    u = np.empty(mm)
    for i, c in zip(range(ops.layout.count), columns):
        c = np.asarray(c, dtype=float)
        if c.shape != (mm,):
            raise ShapeMismatch(
                f"cluster {i} operand has shape {c.shape}, expected ({mm},)")
        ops.u_vector(i, u)
        base = float(u[ops.inter_pos] @ c[ops.inter_pos]) \
            if ops.inter_pos else 0.0
        n_i = int(ops.layout.sizes[i])
        out = buffer[:n_i]
        out[:] = base
        if ops.intra_pos:
            out += ops.intra_block(i) @ c[ops.intra_pos]
        yield i, out
