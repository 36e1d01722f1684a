import io

import pytest
from fastapi.testclient import TestClient

from pulse.api import create_app
from pulse.service import ServiceConfig, SessionService
from pulse.store import Store

ALLOWED_UID = "CARD-01"
READER_KEY = "reader-key"
ADMIN_KEY = "admin-key"


def make_service(tmp_path, **overrides) -> SessionService:
    config = ServiceConfig(
        allowlist={ALLOWED_UID},
        reader_key=READER_KEY,
        admin_key=ADMIN_KEY,
        deterministic_ids=True,
        **overrides,
    )
    return SessionService(Store(tmp_path / "store"), config)


@pytest.fixture
def service(tmp_path):
    return make_service(tmp_path)


@pytest.fixture
def client(service):
    return TestClient(create_app(service))


@pytest.fixture
def reader_headers():
    return {"X-Reader-Key": READER_KEY}


@pytest.fixture
def admin_headers():
    return {"X-Admin-Key": ADMIN_KEY}


def run_sim(client, script_text: str):
    from pulse.sim import SimRunner, parse_script

    out = io.StringIO()
    runner = SimRunner(client, out=out)
    result = runner.run(parse_script(script_text))
    result["output"] = out.getvalue()
    return result


GOLDEN_SCRIPT = """\
CARD CARD-01
I: Thanks for joining, how has the photo app been working for you? @0
P: Honestly it crashes daily when I upload large photo batches. @1000
I: How do you usually work around that? @2000
P: I restart the app and hope the upload resumes where it stopped. @3000
P: Usually it loses my progress, which is frustrating. @4000
I: When does that hit you the hardest? @5000
P: During my morning commute when the connection keeps dropping. @6000
TAP @7000
I: What would make uploads feel reliable to you? @8000
P: I wish uploads paused automatically and resumed without losing work. @9000
P: I need a clear progress indicator for every batch. @10000
I: How do you feel about the gallery screen? @11000
P: I like the gallery layout, browsing photos is easy. @12000
P: The search feature is great when tags are set up. @13000
I: Anything else that slows you down? @14000
P: Tagging photos one by one is painful and slow. @15000
P: I want bulk tagging for a whole batch at once. @16000
I: How often do you upload batches? @17000
P: Every weekend after trips, sometimes during the week too. @18000
P: My partner uses the shared album every day. @19000
I: What do they think of it? @20000
P: They hate the duplicate photos that show up after failed syncs. @21000
P: Duplicates make the shared album confusing to browse. @22000
I: If you could change one thing tomorrow, what would it be? @23000
P: Fix the crashes first, everything else can wait. @24000
TAP @25000
TAP @25200
STOP @27000
"""
