"""Thin capture-side client.

Drafts are delivered either to the audit service's POST /v1/events endpoint or
appended to a local spool file for later `mltrail ingest`. Integrity fields
are never computed client-side; the chain recipe lives in exactly one place,
the core appender.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import httpx

from .taxonomy import EVENT_TYPES


class EmitRejected(Exception):
    """The service refused the draft (client error); retrying won't help."""

    def __init__(self, message: str, violations: list[dict] | None = None):
        super().__init__(message)
        self.violations = violations or []


class DeliveryFailed(Exception):
    """Transport or server failure; the draft was preserved in the retry spool."""

    def __init__(self, message: str, spooled: bool):
        super().__init__(message)
        self.spooled = spooled


@dataclass(frozen=True)
class EmitAck:
    event_id: str | None = None  # endpoint mode: id assigned by the core
    spool_position: int | None = None  # spool mode: 1-based line number


class EmitterClient:
    """Emits event drafts into one audit trail.

    Exactly one of ``endpoint`` / ``spool_path`` must be configured. Default
    scope ids are merged into every draft unless overridden per call. Safe to
    share across threads; spool appends are serialized internally.
    """

    def __init__(
        self,
        *,
        system: str,
        actor: str,
        endpoint: str | None = None,
        spool_path: Path | str | None = None,
        model_id: str | None = None,
        dataset_id: str | None = None,
        deployment_id: str | None = None,
        token: str | None = None,
        retry_spool_path: Path | str | None = None,
        timeout: float = 5.0,
    ):
        if (endpoint is None) == (spool_path is None):
            raise ValueError("configure exactly one of endpoint or spool_path")
        self.system = system
        self.actor = actor
        self.endpoint = endpoint.rstrip("/") if endpoint else None
        self.spool_path = Path(spool_path) if spool_path else None
        self.defaults = {
            "model_id": model_id,
            "dataset_id": dataset_id,
            "deployment_id": deployment_id,
        }
        self.token = token
        self.timeout = timeout
        if self.endpoint is not None:
            self.retry_spool_path = Path(retry_spool_path or "emitter_retry_spool.jsonl")
        else:
            self.retry_spool_path = None
        self._lock = threading.Lock()

    # -- draft construction -------------------------------------------------

    def build_draft(
        self,
        event_type: str,
        details: Any = None,
        *,
        model_id: str | None = None,
        dataset_id: str | None = None,
        deployment_id: str | None = None,
        timestamp: str | None = None,
    ) -> dict[str, Any]:
        """Validated draft dict; raises ValueError before anything leaves the
        process."""
        if event_type not in EVENT_TYPES:
            raise ValueError(f"unknown event type: {event_type!r}")
        try:
            json.dumps(details, allow_nan=False)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"details not JSON-serializable: {exc}") from exc
        draft: dict[str, Any] = {
            "event_type": event_type,
            "system": self.system,
            "actor": self.actor,
            "details": details,
            "model_id": model_id if model_id is not None else self.defaults["model_id"],
            "dataset_id": dataset_id if dataset_id is not None else self.defaults["dataset_id"],
            "deployment_id": (
                deployment_id if deployment_id is not None else self.defaults["deployment_id"]
            ),
        }
        if timestamp is not None:
            draft["timestamp"] = timestamp
        return draft

    # -- delivery -----------------------------------------------------------

    def emit(
        self,
        event_type: str,
        details: Any = None,
        *,
        model_id: str | None = None,
        dataset_id: str | None = None,
        deployment_id: str | None = None,
        timestamp: str | None = None,
    ) -> EmitAck:
        draft = self.build_draft(
            event_type,
            details,
            model_id=model_id,
            dataset_id=dataset_id,
            deployment_id=deployment_id,
            timestamp=timestamp,
        )
        if self.spool_path is not None:
            return EmitAck(spool_position=self._append_to(self.spool_path, draft))
        return self._deliver(draft)

    def flush_retries(self) -> int:
        """Re-deliver spooled drafts in order; stops at the first failure.

        Returns the number delivered. Drafts that still fail stay in the
        retry spool (at-least-once into the spool, not beyond).
        """
        if self.retry_spool_path is None or not self.retry_spool_path.exists():
            return 0
        with self._lock:
            lines = [
                line
                for line in self.retry_spool_path.read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
        delivered = 0
        remaining = list(lines)
        for line in lines:
            draft = json.loads(line)
            try:
                self._post(draft)
            except (DeliveryFailed, EmitRejected):
                break
            delivered += 1
            remaining.pop(0)
        with self._lock:
            self.retry_spool_path.write_text(
                "".join(line + "\n" for line in remaining), encoding="utf-8"
            )
        return delivered

    def _deliver(self, draft: dict[str, Any]) -> EmitAck:
        try:
            return self._post(draft)
        except DeliveryFailed:
            position = self._append_to(self.retry_spool_path, draft)
            raise DeliveryFailed(
                f"delivery to {self.endpoint} failed; draft spooled at line {position}",
                spooled=True,
            ) from None

    def _post(self, draft: dict[str, Any]) -> EmitAck:
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            response = httpx.post(
                f"{self.endpoint}/v1/events", json=draft, headers=headers, timeout=self.timeout
            )
        except httpx.HTTPError as exc:
            raise DeliveryFailed(str(exc), spooled=False) from exc
        if response.status_code == 201:
            return EmitAck(event_id=response.json().get("event_id"))
        if 400 <= response.status_code < 500:
            body = {}
            try:
                body = response.json()
            except ValueError:
                pass
            raise EmitRejected(
                f"{response.status_code}: {body.get('error', response.text[:200])}",
                violations=body.get("violations"),
            )
        raise DeliveryFailed(f"server returned {response.status_code}", spooled=False)

    def _append_to(self, path: Path, draft: dict[str, Any]) -> int:
        line = json.dumps(draft, sort_keys=True, separators=(",", ":")) + "\n"
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            existing = 0
            if path.exists():
                with path.open("rb") as fh:
                    existing = sum(1 for _ in fh)
            with path.open("ab") as fh:
                fh.write(line.encode("utf-8"))
                fh.flush()
                os.fsync(fh.fileno())
            return existing + 1
