"""Serving adapter: pairs of request/response metadata events per call.

Bodies are never logged; each side carries a SHA-256 content hash, the pair
shares a correlation id, and the response records latency. A short sanitized
preview can be opted into with redact=False.
"""

from __future__ import annotations

import hashlib
import logging
import re
import time
import uuid
from typing import Any, Callable

from .client import DeliveryFailed, EmitRejected, EmitterClient

logger = logging.getLogger(__name__)

_DIGITS = re.compile(r"\d")
_PREVIEW_CHARS = 80


def content_sha256(body: bytes | str) -> str:
    data = body.encode("utf-8") if isinstance(body, str) else bytes(body)
    return hashlib.sha256(data).hexdigest()


def sanitized_preview(body: bytes | str) -> str:
    """Placeholder redaction: strip digits, cap at 80 chars."""
    text = body.decode("utf-8", errors="replace") if isinstance(body, bytes) else str(body)
    return _DIGITS.sub("", text)[:_PREVIEW_CHARS]


class ServingMiddleware:
    """Request/response hook for one deployment.

    Either wrap a handler with :meth:`wrap`, or drive the low-level pair
    (:meth:`begin_request` / :meth:`end_request`) from any serving stack.
    """

    def __init__(self, client: EmitterClient, deployment_id: str, redact: bool = True):
        self.client = client
        self.deployment_id = deployment_id
        self.redact = redact

    def begin_request(self, path: str, method: str, body: bytes | str) -> str:
        correlation_id = str(uuid.uuid4())
        details: dict[str, Any] = {
            "correlation_id": correlation_id,
            "path": path,
            "method": method,
            "request_sha256": content_sha256(body),
        }
        if not self.redact:
            details["preview"] = sanitized_preview(body)
        self._emit("InferenceRequestMetadata", details)
        return correlation_id

    def end_request(
        self,
        correlation_id: str,
        path: str,
        method: str,
        response_body: bytes | str,
        latency_ms: float,
    ) -> None:
        details: dict[str, Any] = {
            "correlation_id": correlation_id,
            "path": path,
            "method": method,
            "response_sha256": content_sha256(response_body),
            "latency_ms": round(latency_ms, 3),
        }
        if not self.redact:
            details["preview"] = sanitized_preview(response_body)
        self._emit("InferenceResponseMetadata", details)

    def wrap(
        self, handler: Callable[[str, str, bytes | str], bytes | str]
    ) -> Callable[[str, str, bytes | str], bytes | str]:
        def instrumented(path: str, method: str, body: bytes | str) -> bytes | str:
            correlation_id = self.begin_request(path, method, body)
            started = time.perf_counter()
            response = handler(path, method, body)
            latency_ms = (time.perf_counter() - started) * 1000.0
            self.end_request(correlation_id, path, method, response, latency_ms)
            return response

        return instrumented

    def _emit(self, event_type: str, details: dict[str, Any]) -> None:
        try:
            self.client.emit(event_type, details, deployment_id=self.deployment_id)
        except DeliveryFailed as exc:
            logger.warning("audit event %s not delivered (%s); spooled", event_type, exc)
        except EmitRejected as exc:
            logger.error("audit event %s rejected by the core: %s", event_type, exc)


def serving_middleware(
    client: EmitterClient, deployment_id: str, redact: bool = True
) -> ServingMiddleware:
    return ServingMiddleware(client, deployment_id, redact=redact)
