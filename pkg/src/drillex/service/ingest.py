"""Dataset ingestion: JSON config, CSV loading, and named feature hooks.

A dataset config declares the fact CSV, its hierarchies and measures, any
auxiliary CSVs (joined on a single attribute), and optional named feature
hooks.  Ingestion loads everything into immutable in-memory structures that
sessions share.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ..aggregates import AggCache
from ..errors import MissingColumn, ParseError, SchemaError
from ..features import AuxiliarySpec, FeatureMap, custom_feature
from ..schema import DatasetSchema, Hierarchy, ViewSpec, validate

#: Named feature hooks a config may enable (arbitrary code is not accepted).
HOOK_KINDS = ("identity", "lag-k")


@dataclass(frozen=True)
class AuxiliaryConfig:
    name: str
    path: str
    join: tuple[str, ...]
    measure: str


@dataclass(frozen=True)
class FeatureHook:
    kind: str
    attribute: str
    k: int = 1

    def __post_init__(self) -> None:
        if self.kind not in HOOK_KINDS:
            raise ParseError(f"unknown feature hook {self.kind!r}")
        if self.k < 1:
            raise ParseError("lag must be at least 1")


@dataclass(frozen=True)
class DatasetConfig:
    """Parsed dataset declaration; paths resolve against ``base_dir``."""

    fact: str
    hierarchies: tuple[Hierarchy, ...]
    measures: tuple[str, ...]
    auxiliaries: tuple[AuxiliaryConfig, ...] = ()
    feature_hooks: tuple[FeatureHook, ...] = ()
    base_dir: str = "."

    def resolve(self, path: str) -> Path:
        return Path(self.base_dir) / path


def load_config(path: str | Path) -> DatasetConfig:
    """Read a JSON dataset config; missing or malformed keys raise ParseError."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    try:
        hierarchies = tuple(
            Hierarchy(h["name"], tuple(h["attributes"]))
            for h in raw["hierarchies"])
        auxiliaries = tuple(
            AuxiliaryConfig(a["name"], a["path"], tuple(a["join"]),
                            a["measure"])
            for a in raw.get("auxiliaries", ()))
        hooks = tuple(
            FeatureHook(h["kind"], h["attribute"], int(h.get("k", 1)))
            for h in raw.get("feature_hooks", ()))
        return DatasetConfig(raw["fact"], hierarchies,
                             tuple(raw["measures"]), auxiliaries, hooks,
                             base_dir=str(path.parent))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed config {path}: {exc}") from exc


def _coerce(text: str) -> object:
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def read_csv(path: Path, required: Sequence[str]) -> list[dict]:
    """UTF-8 CSV with a header row; cells coerced to int/float when possible."""
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            header = reader.fieldnames or []
            missing = [c for c in required if c not in header]
            if missing:
                raise MissingColumn(f"{path}: missing columns {missing}")
            return [{k: _coerce(v) for k, v in row.items()}
                    for row in reader]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


#: Extra-feature builder: receives the training store, its attribute order,
#: and per-group bundles; returns a FeatureMap or None to skip.
FeatureBuilder = Callable[..., FeatureMap | None]


def _identity_builder(attribute: str) -> FeatureBuilder:
    def build(store, order, bundles):
        if attribute not in order:
            return None
        domain = set(store.sequence(attribute))
        if not all(isinstance(v, (int, float)) for v in domain):
            return None
        return custom_feature(attribute, lambda v, _s: float(v), domain,
                              name=f"identity[{attribute}]")
    return build


def _lag_builder(attribute: str, k: int) -> FeatureBuilder:
    """Each value's feature is the typical statistic k places earlier.

    The attribute's domain is sorted; a value looks up the per-value median
    of the group means (or counts when no measure is present) at the value k
    positions before it, falling back to the global median at the edges.
    """
    def build(store, order, bundles):
        if attribute not in order:
            return None
        idx = order.index(attribute)
        per_value: dict[object, list[float]] = {}
        for key, b in bundles.items():
            stat = b.mean if b.mean is not None else float(b.count)
            per_value.setdefault(key[idx], []).append(stat)
        medians = {v: float(np.median(s)) for v, s in per_value.items()}
        overall = float(np.median(list(medians.values()))) if medians else 0.0
        domain = sorted(set(store.sequence(attribute)), key=str)
        mapping = {}
        for i, v in enumerate(domain):
            mapping[v] = medians.get(domain[i - k], overall) if i >= k \
                else overall
        return FeatureMap(attribute, "custom", mapping,
                          f"lag{k}[{attribute}]")
    return build


def _builders(hooks: Sequence[FeatureHook]) -> tuple[FeatureBuilder, ...]:
    out = []
    for hook in hooks:
        if hook.kind == "identity":
            out.append(_identity_builder(hook.attribute))
        else:
            out.append(_lag_builder(hook.attribute, hook.k))
    return tuple(out)


@dataclass(frozen=True)
class Dataset:
    """An ingested dataset: immutable rows plus shared aggregate cache."""

    id: str
    config: DatasetConfig
    schema: DatasetSchema
    rows: tuple[Mapping[str, object], ...]
    auxiliaries: tuple[AuxiliarySpec, ...]
    feature_builders: tuple[FeatureBuilder, ...]
    cache: AggCache = field(compare=False)

    def root_view(self) -> ViewSpec:
        measure = self.config.measures[0] if self.config.measures else None
        return ViewSpec(groupby=(), drilled=None, provenance=(),
                        aggregates=("COUNT", "SUM", "MEAN", "STD"),
                        measure=measure)


def ingest(config: DatasetConfig | str | Path) -> Dataset:
    """Load the fact and auxiliary CSVs and validate hierarchy dependencies."""
    if not isinstance(config, DatasetConfig):
        config = load_config(config)
    schema = DatasetSchema(config.hierarchies, config.measures)
    attrs = [a for h in config.hierarchies for a in h.attributes]
    rows = read_csv(config.resolve(config.fact),
                    attrs + list(config.measures))
    problems = validate(rows, schema)
    if problems:
        raise SchemaError(
            f"{len(problems)} hierarchy violations, first: {problems[0]}")
    auxiliaries = []
    for aux in config.auxiliaries:
        aux_rows = read_csv(config.resolve(aux.path),
                            list(aux.join) + [aux.measure])
        auxiliaries.append(AuxiliarySpec(aux.name, tuple(aux_rows),
                                         tuple(aux.join), aux.measure))
    digest = hashlib.sha1(
        json.dumps([config.fact, [h.name for h in config.hierarchies],
                    list(config.measures), len(rows)]).encode())
    return Dataset(digest.hexdigest()[:12], config, schema, tuple(rows),
                   tuple(auxiliaries), _builders(config.feature_hooks),
                   AggCache())
