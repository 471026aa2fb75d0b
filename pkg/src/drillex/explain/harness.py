"""Synthetic evaluation of repair ranking against simple baselines.

Each trial draws a population of groups, corrupts one (or, in the ablation,
three) of them, hands every method the resulting complaint, and records
whether the method's top candidate is a corrupted group.  An auxiliary
per-group attribute with tunable rank correlation to the clean statistic is
available to the model-based method only.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

from ..errors import DrillexError
from ..features import AuxiliarySpec
from ..mlm import TrainConfig
from ..schema import DatasetSchema, Hierarchy, ViewSpec
from .ranking import rank
from .stats import Complaint, StatBundle, combine, complaint_score, \
    group_bundles

CONDITIONS = ("missing", "dup", "up", "down")
#: Complained statistic and direction per corruption type.
_COMPLAINTS = {
    "missing": ("COUNT", "too_low"),
    "dup": ("COUNT", "too_high"),
    "up": ("MEAN", "too_high"),
    "down": ("MEAN", "too_low"),
    "ablation": ("COUNT", "too_low"),
}

_SCHEMA = DatasetSchema((Hierarchy("group", ("group",)),), ("value",))
_VIEW = ViewSpec(groupby=(), aggregates=("COUNT", "MEAN"), measure="value")


@dataclass(frozen=True)
class HarnessResult:
    """Top-1 accuracy of one method under one condition and correlation."""

    condition: str
    method: str
    rho: float
    trials: int
    hits: int

    @property
    def accuracy(self) -> float:
        return self.hits / self.trials if self.trials else 0.0


def correlated_auxiliary(rng: np.random.Generator, targets: np.ndarray,
                         rho: float) -> np.ndarray:
    """A normal sample whose ranks correlate with ``targets`` at ``rho``.

    Van der Waerden scores of the targets are mixed with independent noise
    (weights rho and sqrt(1-rho^2)); a fresh normal sample is then reordered
    to follow the mixture's ranks, so rho=1 reproduces the targets' ranking
    exactly and rho=0 is independent of them.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    g = len(targets)
    ranks = np.argsort(np.argsort(targets, kind="stable"), kind="stable")
    inv = NormalDist().inv_cdf
    scores = np.array([inv((r + 1) / (g + 1)) for r in ranks])
    mixed = rho * scores + np.sqrt(1.0 - rho * rho) * rng.standard_normal(g)
    sample = np.sort(rng.standard_normal(g))
    out = np.empty(g)
    out[np.argsort(mixed, kind="stable")] = sample
    return out


def _make_population(rng: np.random.Generator, groups: int):
    names = [f"g{i:03d}" for i in range(groups)]
    values = {
        name: rng.normal(100.0, 20.0,
                         size=max(1, int(np.rint(rng.normal(100.0, 20.0)))))
        for name in names
    }
    return names, values


def _corrupt(rng: np.random.Generator, values: Mapping[str, np.ndarray],
             names: Sequence[str], condition: str) -> tuple[dict, list[str]]:
    """Apply the condition's corruption; returns dirty values and culprits."""
    dirty = {name: vals.copy() for name, vals in values.items()}
    if condition == "ablation":
        chosen = [names[i] for i in rng.choice(len(names), 3, replace=False)]
        culprits = chosen[:2]
        for name in culprits:
            dirty[name] = dirty[name][:len(dirty[name]) -
                                      len(dirty[name]) // 2]
        dup = dirty[chosen[2]]
        dirty[chosen[2]] = np.concatenate([dup, dup[:len(dup) // 2]])
        return dirty, culprits
    culprit = names[int(rng.integers(len(names)))]
    vals = dirty[culprit]
    if condition == "missing":
        dirty[culprit] = vals[:len(vals) - len(vals) // 2]
    elif condition == "dup":
        dirty[culprit] = np.concatenate([vals, vals[:len(vals) // 2]])
    elif condition == "up":
        dirty[culprit] = vals + 5.0
    elif condition == "down":
        dirty[culprit] = vals - 5.0
    else:
        raise ValueError(f"unknown condition {condition!r}")
    return dirty, [culprit]


def _clean_targets(values: Mapping[str, np.ndarray], names: Sequence[str],
                   stat: str) -> np.ndarray:
    if stat == "COUNT":
        return np.array([len(values[n]) for n in names], dtype=float)
    return np.array([float(np.mean(values[n])) for n in names])


def _rows(values: Mapping[str, np.ndarray],
          names: Sequence[str]) -> list[dict]:
    return [{"group": name, "value": float(v)}
            for name in names for v in values[name]]


def _model_pick(rows: list[dict], complaint: Complaint,
                aux: AuxiliarySpec) -> tuple:
    recommendation = rank(rows, _SCHEMA, _VIEW, complaint, k=1,
                          auxiliaries=(aux,),
                          config=TrainConfig(max_iterations=10))
    return recommendation.best.group


def _sensitivity_pick(bundles: Mapping[tuple, StatBundle],
                      complaint: Complaint) -> tuple:
    """Best group to delete outright, by the same complaint score."""
    best_key, best_score = None, None
    for key in sorted(bundles):
        rest = [b for t, b in bundles.items() if t != key]
        try:
            value = combine(rest).value(complaint.stat)
        except DrillexError:
            continue
        if value is None:
            continue
        score = complaint_score(value, complaint)
        if best_score is None or score < best_score:
            best_key, best_score = key, score
    return best_key


def _support_pick(bundles: Mapping[tuple, StatBundle]) -> tuple:
    return max(sorted(bundles), key=lambda k: bundles[k].count)


def _outlier_pick(bundles: Mapping[tuple, StatBundle],
                  stat: str) -> tuple:
    stats = {k: b.value(stat) for k, b in bundles.items()}
    med = float(np.median([v for v in stats.values() if v is not None]))
    return max(sorted(stats),
               key=lambda k: abs(stats[k] - med) if stats[k] is not None
               else -np.inf)


def synth_harness(conditions: Sequence[str] = CONDITIONS,
                  rhos: Sequence[float] = (1.0,), trials: int = 200,
                  groups: int = 100, seed: int = 7,
                  methods: Sequence[str] | None = None,
                  ) -> list[HarnessResult]:
    """Run ``trials`` corrupted populations per condition and correlation.

    Methods: ``model`` (repair ranking with the auxiliary attribute),
    ``sensitivity`` (score each group's outright deletion), ``support``
    (largest group), and ``outlier`` (furthest count/mean from the median;
    reported for the ablation condition by default).  A hit means the
    method's top pick is one of the corrupted groups.
    """
    results: list[HarnessResult] = []
    for condition in conditions:
        stat, direction = _COMPLAINTS[condition]
        complaint = Complaint((), stat, direction)
        chosen = methods
        if chosen is None:
            chosen = ("model", "sensitivity", "support")
            if condition == "ablation":
                chosen += ("outlier",)
        for rho in rhos:
            hits = dict.fromkeys(chosen, 0)
            for trial in range(trials):
                rng = np.random.default_rng(
                    [seed, CONDITIONS.index(condition)
                     if condition in CONDITIONS else 99,
                     int(rho * 1000), trial])
                names, clean = _make_population(rng, groups)
                dirty, culprits = _corrupt(rng, clean, names, condition)
                targets = _clean_targets(clean, names, stat)
                aux_values = correlated_auxiliary(rng, targets, rho)
                aux = AuxiliarySpec(
                    "aux",
                    tuple({"group": n, "aux": float(a)}
                          for n, a in zip(names, aux_values)),
                    ("group",), "aux")
                rows = _rows(dirty, names)
                bundles = group_bundles(rows, ("group",), "value")
                bad = {(c,) for c in culprits}
                for method in chosen:
                    if method == "model":
                        pick = _model_pick(rows, complaint, aux)
                    elif method == "sensitivity":
                        pick = _sensitivity_pick(bundles, complaint)
                    elif method == "support":
                        pick = _support_pick(bundles)
                    elif method == "outlier":
                        pick = _outlier_pick(bundles, stat)
                    else:
                        raise ValueError(f"unknown method {method!r}")
                    hits[method] += pick in bad
            results.extend(
                HarnessResult(condition, method, rho, trials, hits[method])
                for method in chosen)
    return results
