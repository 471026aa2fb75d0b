"""Distributive statistic bundles: combination, repair, complaint scoring.

A group's statistics travel as (count, mean, std); any partition of the rows
can be recombined without revisiting raw values.  Repairing one group swaps
its bundle before recombining, which updates the complained aggregate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import AllEmpty
from ..schema import STAT_KINDS


@dataclass(frozen=True)
class StatBundle:
    """Count/mean/std of one group; mean None iff empty, std None iff n<2."""

    count: int
    mean: float | None = None
    std: float | None = None

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.count == 0 and self.mean is not None:
            raise ValueError("empty groups have no mean")

    @property
    def total(self) -> float:
        return self.count * self.mean if self.count else 0.0

    @property
    def sumsq(self) -> float:
        """Sum of squared values, recovered from count/mean/std."""
        if self.count == 0:
            return 0.0
        var = self.std ** 2 if self.std is not None else 0.0
        return (self.count - 1) * var + self.count * self.mean ** 2

    def value(self, kind: str) -> float | None:
        if kind == "COUNT":
            return float(self.count)
        if kind == "SUM":
            return self.total
        if kind == "MEAN":
            return self.mean
        if kind == "STD":
            return self.std
        raise ValueError(f"unknown statistic kind {kind!r}")


def from_values(values: Sequence[float]) -> StatBundle:
    c = len(values)
    if c == 0:
        return StatBundle(0)
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if c >= 2 else None
    return StatBundle(c, mean, std)


def bundle_from_moments(count: int, total: float, sumsq: float) -> StatBundle:
    """Bundle from (n, Σx, Σx²); variance clamped at zero."""
    if count <= 0:
        return StatBundle(0)
    mean = total / count
    if count < 2:
        return StatBundle(count, mean)
    var = max((sumsq - count * mean * mean) / (count - 1), 0.0)
    return StatBundle(count, mean, math.sqrt(var))


def combine(bundles: Iterable[StatBundle]) -> StatBundle:
    """Pooled count/mean/std across disjoint groups.

    The pooled variance sums within-group spread (weight n−1) and
    between-group mean shifts (weight n), over a total ddof of one.
    """
    bundles = [b for b in bundles if b.count > 0]
    count = sum(b.count for b in bundles)
    if count == 0:
        raise AllEmpty("no rows across any bundle")
    mean = sum(b.total for b in bundles) / count
    if count < 2:
        return StatBundle(count, mean)
    spread = sum(
        (b.count - 1) * (b.std ** 2 if b.std is not None else 0.0)
        for b in bundles)
    shift = sum(b.count * (b.mean - mean) ** 2 for b in bundles)
    return StatBundle(count, mean, math.sqrt(max(spread + shift, 0.0) /
                                             (count - 1)))


@dataclass(frozen=True)
class Complaint:
    """The user's claim that one view tuple's statistic is wrong."""

    group: tuple
    stat: str
    direction: str  # "too_high" | "too_low" | "target"
    target_value: float | None = None

    def __post_init__(self) -> None:
        if self.stat not in STAT_KINDS:
            raise ValueError(f"unknown statistic kind {self.stat!r}")
        if self.direction not in ("too_high", "too_low", "target"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.direction == "target" and self.target_value is None:
            raise ValueError("target complaints need a target value")


def propagate_repair(view_groups: Mapping[tuple, StatBundle], group: tuple,
                     repaired: StatBundle, complaint: Complaint) -> float:
    """The complained aggregate after swapping ``group``'s bundle.

    COUNT/SUM/MEAN update incrementally from the old aggregate's moments;
    STD recombines every bundle.
    """
    if group not in view_groups:
        raise KeyError(f"group {group!r} not in the view")
    old = view_groups[group]
    kind = complaint.stat
    if kind == "COUNT":
        count = sum(b.count for b in view_groups.values())
        return float(count + repaired.count - old.count)
    if kind in ("SUM", "MEAN"):
        count = sum(b.count for b in view_groups.values())
        total = sum(b.total for b in view_groups.values())
        count += repaired.count - old.count
        total += repaired.total - old.total
        if kind == "SUM":
            return total
        if count == 0:
            raise AllEmpty("mean undefined after repair")
        return total / count
    merged = combine(
        [b for k, b in view_groups.items() if k != group] + [repaired])
    value = merged.value("STD")
    if value is None:
        raise AllEmpty("std undefined after repair")
    return value


def complaint_score(repaired_value: float, complaint: Complaint) -> float:
    """Lower is better: distance to target, or the signed direction value."""
    if complaint.direction == "target":
        return abs(repaired_value - complaint.target_value)
    if complaint.direction == "too_high":
        return repaired_value
    return -repaired_value


def group_bundles(rows: Iterable[Mapping[str, object]],
                  order: Sequence[str], measure: str | None,
                  flt: Mapping[str, object] | None = None,
                  ) -> dict[tuple, StatBundle]:
    """Per-group bundles from raw rows under a conjunctive filter."""
    flt = flt or {}
    moments: dict[tuple, list[float]] = {}
    for row in rows:
        if any(row.get(a) != v for a, v in flt.items()):
            continue
        key = tuple(row[a] for a in order)
        entry = moments.get(key)
        if entry is None:
            entry = moments[key] = [0.0, 0.0, 0.0]
        x = float(row[measure]) if measure is not None else 0.0
        entry[0] += 1.0
        entry[1] += x
        entry[2] += x * x
    return {
        key: bundle_from_moments(int(c), s, ss)
        for key, (c, s, ss) in moments.items()
    }
