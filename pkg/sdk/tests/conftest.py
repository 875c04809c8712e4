"""SDK test fixtures: the core is exercised only through its external
surfaces — the `mltrail` CLI as a subprocess and the HTTP service."""

from __future__ import annotations

import json
import socket
import subprocess
import time
from pathlib import Path

import httpx
import pytest

SDK_ROOT = Path(__file__).resolve().parent.parent
CORE_ROOT = SDK_ROOT.parent
CORE_SCHEMA_PATH = CORE_ROOT / "schemas" / "event_record.schema.json"


def core_schema() -> dict:
    return json.loads(CORE_SCHEMA_PATH.read_text())


def run_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        ["mltrail", *args], capture_output=True, text=True, timeout=60
    )


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class ServiceHandle:
    def __init__(self, endpoint: str, ledger_path: Path, process: subprocess.Popen):
        self.endpoint = endpoint
        self.ledger_path = ledger_path
        self.process = process

    def get_events(self, **params) -> list[dict]:
        response = httpx.get(f"{self.endpoint}/v1/events", params=params, timeout=10)
        response.raise_for_status()
        return response.json()

    def verify(self) -> dict:
        response = httpx.get(f"{self.endpoint}/v1/verify", timeout=10)
        response.raise_for_status()
        return response.json()


@pytest.fixture
def service(tmp_path) -> ServiceHandle:
    ledger_path = tmp_path / "service_trail.jsonl"
    port = free_port()
    endpoint = f"http://127.0.0.1:{port}"
    process = subprocess.Popen(
        ["mltrail", "serve", "--log", str(ledger_path), "--bind", f"127.0.0.1:{port}"],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    deadline = time.monotonic() + 20
    last_error = None
    while time.monotonic() < deadline:
        try:
            if httpx.get(f"{endpoint}/v1/verify", timeout=1).status_code == 200:
                break
        except httpx.HTTPError as exc:
            last_error = exc
        if process.poll() is not None:
            raise RuntimeError("audit service exited early")
        time.sleep(0.1)
    else:
        process.terminate()
        raise RuntimeError(f"audit service never became ready: {last_error}")
    yield ServiceHandle(endpoint, ledger_path, process)
    process.terminate()
    process.wait(timeout=10)
