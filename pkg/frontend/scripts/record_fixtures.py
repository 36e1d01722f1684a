"""Record API fixtures for the dashboard contract tests.

Runs the backend's golden device-emulator script against an in-process
server and writes the JSON responses plus the raw SSE stream under
test/fixtures/. Requires the `pulse` package (install it from the repo
root) and its test directory on sys.path.

Usage: python3 scripts/record_fixtures.py
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "tests"))

from fastapi.testclient import TestClient

from conftest import ADMIN_KEY, GOLDEN_SCRIPT, READER_KEY, make_service, run_sim
from pulse.api import create_app

OUT = Path(__file__).resolve().parents[1] / "test" / "fixtures"


def dump(name, payload):
    (OUT / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        service = make_service(Path(tmp))
        client = TestClient(create_app(service))
        result = run_sim(client, GOLDEN_SCRIPT)
        sid = result["session_id"]
        reader = {"X-Reader-Key": READER_KEY}

        # two extra sessions so the list fixture exercises ordering
        client.post(
            "/v1/sessions",
            json={"credential": "CARD-01", "title": "warm-up chat", "at": 50_000},
        )
        client.post(
            "/v1/sessions",
            json={"credential": "CARD-01", "title": "pilot study", "at": 40_000},
        )
        dump("sessions_list.json", client.get("/v1/sessions", headers=reader).json())
        dump("session_detail.json", client.get(f"/v1/sessions/{sid}", headers=reader).json())
        dump(
            "session_detail_pain_points.json",
            client.get(
                f"/v1/sessions/{sid}", params={"label": "Pain Points"}, headers=reader
            ).json(),
        )
        dump("taxonomy.json", client.get("/v1/taxonomy", headers=reader).json())

        with client.stream(
            "GET",
            f"/v1/sessions/{sid}/live",
            params={"wait": "false"},
            headers=reader,
        ) as resp:
            raw = "".join(chunk for chunk in resp.iter_text())
        (OUT / "live_stream.sse").write_text(raw)

        events = []
        current = {}
        for line in raw.split("\n"):
            if line.startswith("id: "):
                current["seq"] = int(line[4:])
            elif line.startswith("event: "):
                current["event"] = line[7:]
            elif line.startswith("data: "):
                current["data"] = json.loads(line[6:])
            elif not line and current:
                events.append(current)
                current = {}
        dump("live_events.json", events)
        print(f"recorded fixtures for {sid}: {len(events)} live events")


if __name__ == "__main__":
    main()
