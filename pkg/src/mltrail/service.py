"""HTTP facade over one ledger so heterogeneous emitters write into it and
auditors query it remotely.

Every response body is canonical JSON, byte-identical to what the underlying
library call produces for the same snapshot. Integrity fields are computed
server-side only: emitters never handle hashing, which keeps the chain recipe
in one implementation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response
from starlette.concurrency import run_in_threadpool

from .canonical import NonCanonicalizable, canonical_serialize, loads_strict
from .chain import WriterKey, load_key
from .events import WireFormatError
from .query import EventFilter, filter_events
from .store import (
    EventDraft,
    LockUnavailable,
    ValidationFailed,
    open_ledger,
    read_ledger,
)
from .verify import verify_log


@dataclass
class ServiceConfig:
    ledger_path: Path
    bind: str = "127.0.0.1:8420"
    sign_key_path: Path | None = None
    auth_token: str | None = None
    max_details_bytes: int = 64 * 1024

    def __post_init__(self) -> None:
        self.ledger_path = Path(self.ledger_path)
        if self.max_details_bytes <= 0:
            raise ValueError("max_details_bytes must be positive")
        host, sep, port = self.bind.partition(":")
        if not host or not sep or not port.isdigit():
            raise ValueError("bind must look like HOST:PORT")

    @property
    def host(self) -> str:
        return self.bind.partition(":")[0]

    @property
    def port(self) -> int:
        return int(self.bind.partition(":")[2])


def _json_response(payload: Any, status_code: int = 200) -> Response:
    return Response(
        content=canonical_serialize(payload) + b"\n",
        status_code=status_code,
        media_type="application/json",
    )


def _error(status_code: int, message: str, violations: list[dict] | None = None) -> Response:
    body: dict[str, Any] = {"error": message}
    if violations is not None:
        body["violations"] = violations
    return _json_response(body, status_code)


_FILTER_PARAMS = {"model_id", "dataset_id", "deployment_id", "type", "from", "to"}


def create_app(config: ServiceConfig) -> FastAPI:
    writer_key: WriterKey | None = None
    if config.sign_key_path is not None:
        writer_key = load_key(config.sign_key_path)
    # Initialize eagerly so a bad path fails at startup, not first request.
    open_ledger(config.ledger_path, writer_key=writer_key, create=True)

    app = FastAPI(title="audit trail ingest", docs_url=None, redoc_url=None)

    def unauthorized(request: Request) -> Response | None:
        if config.auth_token is None:
            return None
        header = request.headers.get("authorization", "")
        if header != f"Bearer {config.auth_token}":
            return _error(401, "missing or invalid bearer token")
        return None

    @app.post("/v1/events")
    async def post_event(request: Request) -> Response:
        denied = unauthorized(request)
        if denied is not None:
            return denied
        raw = await request.body()
        try:
            obj = loads_strict(raw)
        except ValueError:
            return _error(400, "request body is not valid JSON")
        try:
            draft = EventDraft.from_wire(obj)
        except WireFormatError as exc:
            return _error(400, str(exc))
        try:
            details_size = len(canonical_serialize(draft.details))
        except NonCanonicalizable as exc:
            return _error(400, f"details not canonicalizable: {exc}")
        if details_size > config.max_details_bytes:
            return _error(413, f"details exceed {config.max_details_bytes} bytes")

        def do_append():
            ledger = open_ledger(config.ledger_path, writer_key=writer_key)
            return ledger.append(draft)

        try:
            record = await run_in_threadpool(do_append)
        except ValidationFailed as exc:
            return _error(400, "validation failed", [v.to_wire() for v in exc.violations])
        except LockUnavailable:
            return _error(503, "writer lock unavailable; retry")
        return _json_response(record.to_wire(), status_code=201)

    @app.get("/v1/events")
    async def get_events(request: Request) -> Response:
        denied = unauthorized(request)
        if denied is not None:
            return denied
        params = request.query_params
        unknown = set(params.keys()) - _FILTER_PARAMS
        if unknown:
            return _error(400, f"unknown query parameter(s): {sorted(unknown)}")
        try:
            flt = EventFilter(
                model_id=params.get("model_id") or None,
                dataset_id=params.get("dataset_id") or None,
                deployment_id=params.get("deployment_id") or None,
                event_types=frozenset(params.getlist("type")) or None,
                time_from=params.get("from") or None,
                time_to=params.get("to") or None,
            )
        except ValueError as exc:
            return _error(400, str(exc))

        def do_read():
            return filter_events(read_ledger(config.ledger_path).records, flt)

        records = await run_in_threadpool(do_read)
        return _json_response([record.to_wire() for record in records])

    @app.get("/v1/verify")
    async def get_verify(request: Request) -> Response:
        denied = unauthorized(request)
        if denied is not None:
            return denied
        report = await run_in_threadpool(lambda: verify_log(config.ledger_path))
        return _json_response(report.to_wire())

    return app
