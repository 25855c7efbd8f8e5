from __future__ import annotations

import socket
import threading
import time
from pathlib import Path

import httpx
import pytest
import uvicorn

from convrec.gateway import GatewayConfig, create_app
from convrec.mocks import MockBackend, create_mock_app, load_corpus
from convrec.model import Feature, ItemProfile

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "convrec" / "data"
WORKSPACE_PATH = DATA_DIR / "workspace.json"
MESSAGES_PATH = DATA_DIR / "messages.json"
CORPUS_PATH = DATA_DIR / "corpus.json"


def make_item(item_id: str, *feature_pairs: tuple[str, str], title: str = "",
              description: str | None = None) -> ItemProfile:
    features = frozenset(Feature(c, v) for c, v in feature_pairs)
    return ItemProfile(item_id, title or item_id, features, description)


def free_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


class ServerHandle:
    def __init__(self, app, port: int):
        self.port = port
        self.base_url = f"http://127.0.0.1:{port}"
        self._server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self):
        self._thread.start()
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            try:
                if httpx.get(f"{self.base_url}/health", timeout=1).status_code == 200:
                    return self
            except httpx.HTTPError:
                time.sleep(0.02)
        raise RuntimeError(f"server on port {self.port} did not come up")

    def stop(self):
        self._server.should_exit = True
        self._thread.join(timeout=5)


def start_server(app) -> ServerHandle:
    return ServerHandle(app, free_port()).start()


def gateway_config(mock_base: str, persistence_path, **overrides) -> GatewayConfig:
    defaults = dict(
        recommender_base_url=mock_base,
        user_service_base_url=mock_base,
        item_service_base_url=mock_base,
        workspace_path=str(WORKSPACE_PATH),
        messages_path=str(MESSAGES_PATH),
        persistence_path=str(persistence_path),
    )
    defaults.update(overrides)
    return GatewayConfig(**defaults)


class Stack:
    """A mock-services process plus a gateway, both over real HTTP."""

    def __init__(self, tmp_path, score_scale: str = "unit", **config_overrides):
        items, users = load_corpus(CORPUS_PATH)
        self.backend = MockBackend(items, users, score_scale)
        self.mock = start_server(create_mock_app(self.backend))
        self.persistence = Path(tmp_path) / "stores"
        self.config = gateway_config(self.mock.base_url, self.persistence,
                                     **config_overrides)
        self.gateway_server = start_server(create_app(self.config))
        self.base_url = self.gateway_server.base_url
        self.client = httpx.Client(base_url=self.base_url, timeout=10)

    def open_session(self, user_id: str) -> str:
        response = self.client.post("/session", json={"user_id": user_id})
        assert response.status_code == 201, response.text
        return response.json()["session_id"]

    def say(self, sid: str, text: str) -> dict:
        response = self.client.post(f"/session/{sid}/message", json={"text": text})
        assert response.status_code == 200, response.text
        return response.json()

    def close_session(self, sid: str) -> dict:
        response = self.client.delete(f"/session/{sid}")
        assert response.status_code == 200, response.text
        return response.json()

    def stop(self):
        self.client.close()
        self.gateway_server.stop()
        self.mock.stop()


@pytest.fixture
def stack(tmp_path):
    s = Stack(tmp_path)
    yield s
    s.stop()
