import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from recfeed.service import create_app
from recfeed.session import SessionConfig

from conftest import build_engine
from test_session import FailingProvider

GOLDEN_PATH = Path(__file__).parent / "golden" / "service_session.json"


@pytest.fixture()
def client(books_catalog):
    engine = build_engine(books_catalog)
    app = create_app(engine)
    return TestClient(app)


def scripted_session(client):
    """The fixed script behind the golden contract fixture."""
    views = []
    views.append(client.post("/sessions", json={
        "user_id": "u1", "history": ["i2", "i5"], "session_id": "golden-1",
    }).json())
    views.append(client.post("/sessions/golden-1/commands", json={
        "text": "want category: mystery",
    }).json())
    views.append(client.post("/sessions/golden-1/commands", json={
        "text": "too expensive, under 40",
    }).json())
    views.append(client.get("/sessions/golden-1").json())
    return views


class TestSessionEndpoints:
    def test_create_returns_201_round_zero(self, client):
        response = client.post("/sessions", json={"user_id": "alice"})
        assert response.status_code == 201
        body = response.json()
        assert body["round"] == 0
        assert body["status"] == "active"
        assert len(body["feed"]) == 5

    def test_unknown_history_item_400(self, client):
        response = client.post("/sessions", json={"user_id": "a", "history": ["ghost"]})
        assert response.status_code == 400
        assert "ghost" in response.json()["detail"]

    def test_duplicate_session_id_409(self, client):
        client.post("/sessions", json={"user_id": "a", "session_id": "dup"})
        response = client.post("/sessions", json={"user_id": "b", "session_id": "dup"})
        assert response.status_code == 409

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404
        response = client.post("/sessions/nope/commands", json={"text": "hi"})
        assert response.status_code == 404

    def test_healthz(self, client):
        body = client.get("/healthz").json()
        assert body["status"] == "ok" and body["catalog_size"] == 8


class TestCommandEndpoint:
    def test_under_50_feed_prices_or_fallback(self, client):
        client.post("/sessions", json={"user_id": "a", "session_id": "s1"})
        body = client.post("/sessions/s1/commands", json={"text": "under $50"}).json()
        assert body["round"] == 1
        if not body["fallback"]:
            prices = [item["price"] for item in body["feed"]]
            assert prices and all(p is not None and p < 50 for p in prices)

    def test_satisfied_flag_terminates(self, client):
        client.post("/sessions", json={"user_id": "a", "session_id": "s2"})
        body = client.post("/sessions/s2/commands", json={
            "text": "looks great!", "satisfied": True,
        }).json()
        assert body["status"] == "satisfied"

    def test_command_on_terminal_session_409(self, client):
        client.post("/sessions", json={"user_id": "a", "session_id": "s3"})
        client.post("/sessions/s3/commands", json={"text": "ok", "satisfied": True})
        response = client.post("/sessions/s3/commands", json={"text": "more"})
        assert response.status_code == 409

    def test_exhaustion_then_409(self, books_catalog):
        engine = build_engine(books_catalog)
        app = create_app(engine)
        client = TestClient(app)
        client.post("/sessions", json={"user_id": "a", "session_id": "s4", "t_max": 1})
        body = client.post("/sessions/s4/commands", json={"text": "want pages: 100"}).json()
        assert body["status"] == "exhausted"
        response = client.post("/sessions/s4/commands", json={"text": "more"})
        assert response.status_code == 409

    def test_reads_are_idempotent(self, client):
        client.post("/sessions", json={"user_id": "a", "session_id": "s5"})
        client.post("/sessions/s5/commands", json={"text": "want category: romance"})
        first = client.get("/sessions/s5").json()
        second = client.get("/sessions/s5").json()
        assert first == second

    def test_provider_failure_502_state_unchanged(self, books_catalog):
        provider = FailingProvider()
        engine = build_engine(books_catalog, provider=provider, with_aia=False)
        app = create_app(engine)
        client = TestClient(app)
        client.post("/sessions", json={"user_id": "a", "session_id": "s6"})
        before = client.get("/sessions/s6").json()
        provider.fail_after = provider.calls
        response = client.post("/sessions/s6/commands", json={"text": "prefer cooking books"})
        assert response.status_code == 502
        after = client.get("/sessions/s6").json()
        assert after == before

    def test_trace_endpoint(self, client):
        client.post("/sessions", json={"user_id": "a", "session_id": "s7"})
        client.post("/sessions/s7/commands", json={"text": "under $50"})
        body = client.get("/sessions/s7/trace").json()
        assert body["round"] == 1
        assert body["trace"]["chain"]["stages"] == [["Filter"]]


class TestGoldenContract:
    def test_scripted_session_matches_golden(self, client):
        views = scripted_session(client)
        golden = json.loads(GOLDEN_PATH.read_text())
        assert views == golden

    def test_views_mirror_engine_state(self, books_catalog):
        engine = build_engine(books_catalog)
        app = create_app(engine)
        client = TestClient(app)
        view = client.post("/sessions", json={
            "user_id": "u1", "history": ["i2"], "session_id": "mirror",
        }).json()
        store = app.state.store
        session = store.sessions["mirror"]
        assert view["round"] == session.t
        assert view["status"] == session.status
        assert [i["item_id"] for i in view["feed"]] == list(session.current_feed.item_ids())
        assert view["preferences"] == session.memory.to_dict()


class TestRestartRestore:
    def test_restore_from_logs(self, books_catalog, tmp_path):
        engine = build_engine(books_catalog, log_dir=tmp_path)
        app = create_app(engine)
        client = TestClient(app)
        client.post("/sessions", json={"user_id": "u1", "session_id": "persist-1"})
        client.post("/sessions/persist-1/commands", json={"text": "want category: mystery"})
        before = client.get("/sessions/persist-1").json()

        engine2 = build_engine(books_catalog, log_dir=tmp_path)
        app2 = create_app(engine2)
        client2 = TestClient(app2)
        after = client2.get("/sessions/persist-1").json()
        assert after == before
