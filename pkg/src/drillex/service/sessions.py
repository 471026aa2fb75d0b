"""Per-session view state and the JSON payload builders the API serves."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .. import factorizer
from ..errors import UnknownGroup
from ..explain import Complaint, Recommendation, StatBundle, group_bundles, \
    rank
from ..mlm import TrainConfig
from ..schema import ViewSpec, drilldown, view_blocks, view_order
from .ingest import Dataset


@dataclass
class SessionState:
    """One analyst's drill-down trail over a shared dataset."""

    id: str
    dataset: Dataset
    view: ViewSpec
    complaint: Complaint | None = None
    complaints: list[dict] = field(default_factory=list)
    path: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """Sessions keyed by sequential ids (deterministic request replays)."""

    def __init__(self) -> None:
        self._sessions: dict[str, SessionState] = {}
        self._lock = threading.Lock()

    def create(self, dataset: Dataset) -> SessionState:
        with self._lock:
            sid = f"s{len(self._sessions) + 1}"
            session = SessionState(sid, dataset, dataset.root_view())
            self._sessions[sid] = session
            return session

    def get(self, sid: str) -> SessionState:
        try:
            return self._sessions[sid]
        except KeyError:
            raise UnknownGroup(f"unknown session {sid!r}") from None


def _store_for(session: SessionState):
    view = session.view
    blocks = view_blocks(session.dataset.schema, view)
    if not blocks:
        return None
    return factorizer.build(session.dataset.rows, blocks, view.filter)


def group_keys(session: SessionState) -> list[tuple]:
    store = _store_for(session)
    if store is None:
        return [()]
    return list(factorizer.cartesian_keys(store))


def coerce_group(session: SessionState, raw: Sequence) -> tuple:
    """Match a client-supplied key against the view's group keys.

    Exact tuples pass through; otherwise each position falls back to string
    comparison against the attribute's domain (query parameters arrive as
    text).  Unmatched keys raise UnknownGroup.
    """
    keys = group_keys(session)
    key = tuple(raw)
    if key in keys:
        return key
    by_text = {tuple(str(v) for v in k): k for k in keys}
    try:
        return by_text[tuple(str(v) for v in raw)]
    except KeyError:
        raise UnknownGroup(f"group {list(raw)!r} is not in the view") from None


def _bundle_json(bundle: StatBundle) -> dict:
    return {
        "count": int(bundle.count),
        "sum": float(bundle.total),
        "mean": None if bundle.mean is None else float(bundle.mean),
        "std": None if bundle.std is None else float(bundle.std),
    }


def view_payload(session: SessionState) -> dict:
    """The current view's groups with their statistics and auxiliary values."""
    dataset = session.dataset
    view = session.view
    order = view_order(dataset.schema, view)
    keys = group_keys(session)
    bundles = group_bundles(dataset.rows, order, view.measure, view.filter)
    groups = [
        {"key": list(key), **_bundle_json(bundles.get(key, StatBundle(0)))}
        for key in keys
    ]
    auxiliaries = []
    for spec in dataset.auxiliaries:
        attr = spec.join_attrs[0]
        if attr not in order:
            continue
        i = order.index(attr)
        lookup = {r[attr]: float(r[spec.measure]) for r in spec.rows}
        auxiliaries.append({
            "name": spec.name,
            "attribute": attr,
            "measure": spec.measure,
            "values": [lookup.get(key[i]) for key in keys],
        })
    return {
        "session": session.id,
        "order": list(order),
        "filter": {k: v for k, v in sorted(view.filter.items())},
        "drilled": view.drilled,
        "path": list(session.path),
        "aggregates": list(view.aggregates),
        "measure": view.measure,
        "groups": groups,
        "auxiliaries": auxiliaries,
    }


def set_complaint(session: SessionState, group: Sequence, stat: str,
                  direction: str, target_value: float | None) -> dict:
    key = coerce_group(session, group)
    complaint = Complaint(key, stat, direction, target_value)
    order = view_order(session.dataset.schema, session.view)
    bundles = group_bundles(session.dataset.rows, order,
                            session.view.measure, session.view.filter)
    bundle = bundles.get(key, StatBundle(0))
    current = bundle.value(stat)
    session.complaint = complaint
    record = {
        "group": list(key),
        "stat": stat,
        "direction": direction,
        "target_value": target_value,
        "current_value": None if current is None else float(current),
    }
    session.complaints.append(record)
    return record


def recommendation_payload(recommendation: Recommendation) -> dict:
    def candidate_json(c) -> dict:
        return {
            "hierarchy": c.hierarchy,
            "group": list(c.group),
            "actual": _bundle_json(c.actual),
            "repaired": _bundle_json(c.repaired),
            "repaired_value": float(c.repaired_value),
            "score": float(c.score),
        }

    current = recommendation.current_value
    return {
        "complaint": {
            "group": list(recommendation.complaint.group),
            "stat": recommendation.complaint.stat,
            "direction": recommendation.complaint.direction,
            "target_value": recommendation.complaint.target_value,
        },
        "current_value": None if current is None else float(current),
        "best": candidate_json(recommendation.best),
        "rankings": [
            {
                "hierarchy": r.hierarchy,
                "attribute": r.attribute,
                "order": list(r.order),
                "highlight_keys": [list(c.group) for c in r.candidates],
                "candidates": [candidate_json(c) for c in r.candidates],
            }
            for r in recommendation.rankings
        ],
    }


def recommend(session: SessionState, k: int,
              iterations: int = 20) -> Recommendation:
    if session.complaint is None:
        raise UnknownGroup("no complaint filed for this session")
    dataset = session.dataset
    return rank(dataset.rows, dataset.schema, session.view,
                session.complaint, k,
                auxiliaries=dataset.auxiliaries,
                feature_builders=dataset.feature_builders,
                cache=dataset.cache,
                config=TrainConfig(max_iterations=iterations))


def apply_drilldown(session: SessionState, hierarchy: str,
                    group: Sequence) -> dict:
    key = coerce_group(session, group)
    order = view_order(session.dataset.schema, session.view)
    session.view = drilldown(session.dataset.schema, session.view,
                             dict(zip(order, key)), hierarchy)
    session.complaint = None
    session.path.append({"hierarchy": hierarchy, "group": list(key)})
    return view_payload(session)


def records_payload(session: SessionState, group: Sequence) -> dict:
    """The fact rows behind one group of the current view (pass-through)."""
    key = coerce_group(session, group)
    order = view_order(session.dataset.schema, session.view)
    predicate: Mapping[str, object] = {**session.view.filter,
                                       **dict(zip(order, key))}
    rows = [
        dict(row) for row in session.dataset.rows
        if all(row.get(a) == v for a, v in predicate.items())
    ]
    return {"group": list(key), "rows": rows}
