"""HTTP JSON API: sessions, view statistics, complaints, recommendations."""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..errors import DrillexError, UnknownGroup, UnknownHierarchy
from .ingest import Dataset
from .sessions import SessionStore, apply_drilldown, recommend, \
    recommendation_payload, records_payload, set_complaint, view_payload

_NOT_FOUND = (UnknownGroup, UnknownHierarchy)


class ComplaintBody(BaseModel):
    group: list
    stat: str
    direction: str
    target_value: float | None = None


class DrilldownBody(BaseModel):
    hierarchy: str
    group: list


def create_app(dataset: Dataset, train_iterations: int = 20) -> FastAPI:
    """The API for one in-memory dataset; sessions are independent."""
    app = FastAPI(title="drillex", version="1.0")
    # The browser client may be served from any static host; the API itself
    # is unauthenticated, so an open CORS policy gives up nothing.
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    sessions = SessionStore()

    @app.exception_handler(DrillexError)
    async def _drillex_error(_request: Request, exc: DrillexError):
        status = 404 if isinstance(exc, _NOT_FOUND) else 400
        return JSONResponse({"detail": str(exc)}, status_code=status)

    @app.exception_handler(ValueError)
    async def _value_error(_request: Request, exc: ValueError):
        return JSONResponse({"detail": str(exc)}, status_code=400)

    @app.get("/dataset")
    def dataset_info() -> dict:
        return {
            "id": dataset.id,
            "hierarchies": [
                {"name": h.name, "attributes": list(h.attributes)}
                for h in dataset.schema.hierarchies
            ],
            "measures": list(dataset.schema.measures),
            "rows": len(dataset.rows),
            "auxiliaries": [a.name for a in dataset.auxiliaries],
        }

    @app.post("/sessions")
    def create_session() -> dict:
        session = sessions.create(dataset)
        return {"session": session.id, "view": view_payload(session)}

    @app.get("/sessions/{sid}/view")
    def get_view(sid: str) -> dict:
        session = sessions.get(sid)
        with session.lock:
            return view_payload(session)

    @app.post("/sessions/{sid}/complaint")
    def post_complaint(sid: str, body: ComplaintBody) -> dict:
        session = sessions.get(sid)
        with session.lock:
            return set_complaint(session, body.group, body.stat,
                                 body.direction, body.target_value)

    @app.get("/sessions/{sid}/recommendations")
    def get_recommendations(sid: str, k: int = Query(default=5, ge=1)) -> dict:
        session = sessions.get(sid)
        with session.lock:
            recommendation = recommend(session, k, train_iterations)
            return recommendation_payload(recommendation)

    @app.post("/sessions/{sid}/drilldown")
    def post_drilldown(sid: str, body: DrilldownBody) -> dict:
        session = sessions.get(sid)
        with session.lock:
            return apply_drilldown(session, body.hierarchy, body.group)

    @app.get("/sessions/{sid}/records")
    def get_records(sid: str,
                    group: list[str] = Query(default=[])) -> dict:
        session = sessions.get(sid)
        with session.lock:
            return records_payload(session, group)

    return app
