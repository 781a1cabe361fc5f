"""Record the demo-scenario service payloads the UI snapshot tests pin.

Drives the real service app in-process and saves each response body
byte-for-byte under frontend/tests/fixtures/. Rerun after any change to
the bundled demo model or the service payload shapes, then review the
snapshot diffs in the frontend test suite.

Usage: python3 tools/record_ui_fixtures.py
"""

from __future__ import annotations

import csv
import io
import pathlib
from importlib import resources

from fastapi.testclient import TestClient

from plotsmith.service import build_app

FIXTURE_DIR = pathlib.Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

CUT = 6
INTERVENTION = "confiscate-passport"
PROFILE = "default"
U_D = 0.6


def _demo_rows() -> list[list[float]]:
    text = resources.files("plotsmith").joinpath("assets/demo_observations.csv").read_text("utf-8")
    reader = csv.reader(io.StringIO(text))
    next(reader)  # header
    return [[float(v) for v in row[1:]] for row in reader if row]


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    recorded: dict[str, bytes] = {}

    with TestClient(build_app()) as client:
        created = client.post("/v1/sessions", json={"model": "demo"})
        created.raise_for_status()
        sid = created.json()["session_id"]
        recorded["demo-session.json"] = created.content

        appended = client.post(f"/v1/sessions/{sid}/observations", json={"rows": _demo_rows()})
        appended.raise_for_status()

        beliefs = client.get(f"/v1/sessions/{sid}/beliefs")
        beliefs.raise_for_status()
        recorded["demo-beliefs.json"] = beliefs.content

        whatif = client.post(
            f"/v1/sessions/{sid}/whatif",
            json={"cut": CUT, "intervention": INTERVENTION, "profile": PROFILE},
        )
        whatif.raise_for_status()
        recorded["demo-whatif.json"] = whatif.content

        null_whatif = client.post(
            f"/v1/sessions/{sid}/whatif",
            json={"cut": CUT, "intervention": None, "profile": None},
        )
        null_whatif.raise_for_status()
        recorded["demo-whatif-null.json"] = null_whatif.content

        score = client.post(f"/v1/sessions/{sid}/score", json={"u_d": U_D})
        score.raise_for_status()
        recorded["demo-score.json"] = score.content

    for name, body in recorded.items():
        path = FIXTURE_DIR / name
        path.write_bytes(body)
        print(f"wrote {path.relative_to(FIXTURE_DIR.parent.parent.parent)} ({len(body)} bytes)")

    # The session id inside demo-session.json is random per recording; the UI
    # tests must not depend on it, so flag it for the reviewer.
    print(f"note: demo-session.json carries a fresh session_id; cut={CUT}, u_d={U_D}")


if __name__ == "__main__":
    main()
