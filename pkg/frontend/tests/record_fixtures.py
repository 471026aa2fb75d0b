"""Record the HTTP exchanges the UI tests replay.

Runs the bundled demo dataset behind an in-process test client and captures
every request/response of the scripted session loop byte-for-byte, so the
frontend tests exercise real server output without a live server.

Regenerate with ``npm run fixtures`` (or ``python3 tests/record_fixtures.py``)
whenever the API or the demo dataset changes.
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from drillex.service.api import create_app
from drillex.service.demo import write_demo
from drillex.service.ingest import ingest

HERE = Path(__file__).resolve().parent


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        dataset = ingest(write_demo(tmp))
    client = TestClient(create_app(dataset))
    exchanges = []

    def record(method, path, params=(), body=None):
        kwargs = {}
        if params:
            kwargs["params"] = list(params)
        if body is not None:
            kwargs["json"] = body
        response = client.request(method, path, **kwargs)
        exchanges.append({
            "method": method,
            "path": path,
            "params": [[key, str(value)] for key, value in params],
            "body": body,
            "status": response.status_code,
            "response": response.content.decode("utf-8"),
        })
        return response.json()

    record("GET", "/dataset")
    opened = record("POST", "/sessions")
    base = f"/sessions/{opened['session']}"

    # The scripted loop: root -> districts -> districts x years, complain
    # that (Ofla, 1986) STD is too high, fetch the suspects, drill into the
    # recommended hierarchy, then pull one leaf group's raw rows.
    record("POST", f"{base}/drilldown",
           body={"hierarchy": "geo", "group": []})
    record("POST", f"{base}/drilldown",
           body={"hierarchy": "time", "group": ["Ofla"]})
    record("POST", f"{base}/complaint",
           body={"group": ["Ofla", 1986], "stat": "STD",
                 "direction": "too_high", "target_value": None})
    record("GET", f"{base}/recommendations", params=[("k", 5)])
    record("POST", f"{base}/drilldown",
           body={"hierarchy": "geo", "group": ["Ofla", 1986]})
    record("GET", f"{base}/records",
           params=[("group", 1986), ("group", "Ofla"), ("group", "Zata")])

    out = HERE / "fixtures" / "session_loop.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "note": "recorded demo-dataset session loop; regenerate with "
                "`npm run fixtures` after API changes",
        "exchanges": exchanges,
    }
    out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(exchanges)} exchanges)")


if __name__ == "__main__":
    main()
