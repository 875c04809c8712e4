"""Canonical event schema: the record type, the event-type taxonomy across
lifecycle stages, wire parsing, and schema validation.

Every record shares one compact core schema; ``details`` stays free-form
except for governance decisions, whose content (owner, rationale, scope,
constraints, references) is schema-enforced.
"""

from __future__ import annotations

import re
import uuid
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Any, Iterator

from .canonical import NonCanonicalizable, canonical_serialize
from .chain import GENESIS, Signature, is_hash, is_prev_hash


class EventType(str, Enum):
    """Closed event taxonomy; the wire value is the exact member string."""

    # development: training and evaluation
    DATASET_REGISTERED = "DatasetRegistered"
    FINE_TUNE_START = "FineTuneStart"
    EPOCH_END = "EpochEnd"
    EVALUATION = "Evaluation"
    CHECKPOINT_SAVED = "CheckpointSaved"
    FINE_TUNE_END = "FineTuneEnd"
    ARTIFACT_REGISTERED = "ArtifactRegistered"
    # deployment
    DEPLOYMENT_STARTED = "DeploymentStarted"
    DEPLOYMENT_COMPLETED = "DeploymentCompleted"
    ROLLOUT_CHANGED = "RolloutChanged"
    SERVING_CONFIG_CHANGED = "ServingConfigChanged"
    MODEL_DEPLOYED = "ModelDeployed"
    # monitoring and operations
    INFERENCE_REQUEST_METADATA = "InferenceRequestMetadata"
    INFERENCE_RESPONSE_METADATA = "InferenceResponseMetadata"
    GUARDRAIL_TRIGGERED = "GuardrailTriggered"
    DRIFT_DETECTED = "DriftDetected"
    INCIDENT_OPENED = "IncidentOpened"
    INCIDENT_RESOLVED = "IncidentResolved"
    # governance checkpoints
    APPROVAL = "Approval"
    RISK_WAIVER = "RiskWaiver"
    ATTESTATION = "Attestation"
    # trail plumbing (auditor actions are themselves logged)
    EXPORT_CREATED = "ExportCreated"
    POINTER_PUBLISHED = "PointerPublished"


DEVELOPMENT_TYPES = frozenset(
    t.value
    for t in (
        EventType.DATASET_REGISTERED,
        EventType.FINE_TUNE_START,
        EventType.EPOCH_END,
        EventType.EVALUATION,
        EventType.CHECKPOINT_SAVED,
        EventType.FINE_TUNE_END,
        EventType.ARTIFACT_REGISTERED,
    )
)
DEPLOYMENT_TYPES = frozenset(
    t.value
    for t in (
        EventType.DEPLOYMENT_STARTED,
        EventType.DEPLOYMENT_COMPLETED,
        EventType.ROLLOUT_CHANGED,
        EventType.SERVING_CONFIG_CHANGED,
        EventType.MODEL_DEPLOYED,
    )
)
OPERATIONS_TYPES = frozenset(
    t.value
    for t in (
        EventType.INFERENCE_REQUEST_METADATA,
        EventType.INFERENCE_RESPONSE_METADATA,
        EventType.GUARDRAIL_TRIGGERED,
        EventType.DRIFT_DETECTED,
        EventType.INCIDENT_OPENED,
        EventType.INCIDENT_RESOLVED,
    )
)
GOVERNANCE_TYPES = frozenset(
    t.value for t in (EventType.APPROVAL, EventType.RISK_WAIVER, EventType.ATTESTATION)
)
PLUMBING_TYPES = frozenset(
    t.value for t in (EventType.EXPORT_CREATED, EventType.POINTER_PUBLISHED)
)

# Technical events are meaningless without a stable identifier to key them by.
SCOPED_TECHNICAL_TYPES = DEVELOPMENT_TYPES | DEPLOYMENT_TYPES | OPERATIONS_TYPES
ALL_EVENT_TYPES = frozenset(t.value for t in EventType)

SCOPE_KEYS = ("model_id", "dataset_id", "deployment_id")

STRICT = "strict"
LENIENT = "lenient"

_UUID_RE = re.compile(r"^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$")
_RFC3339_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[Tt ](\d{2}):(\d{2}):(\d{2})(?:\.(\d+))?([Zz]|[+-]\d{2}:\d{2})$"
)


def new_event_id() -> str:
    return str(uuid.uuid4())


def now_rfc3339() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_rfc3339(ts: Any) -> datetime | None:
    """Parse an RFC3339 date-time with any offset; None when invalid."""
    if not isinstance(ts, str):
        return None
    match = _RFC3339_RE.match(ts)
    if match is None:
        return None
    year, month, day, hour, minute, second, frac, offset = match.groups()
    micro = int((frac or "0").ljust(6, "0")[:6])
    if offset in ("Z", "z"):
        delta = timedelta(0)
    else:
        sign = 1 if offset[0] == "+" else -1
        delta = sign * timedelta(hours=int(offset[1:3]), minutes=int(offset[4:6]))
    try:
        return datetime(
            int(year), int(month), int(day), int(hour), int(minute), int(second),
            micro, tzinfo=timezone(delta),
        )
    except ValueError:
        return None


def parse_rfc3339_utc(ts: Any) -> datetime | None:
    """Parse an RFC3339 instant and require the UTC offset."""
    parsed = parse_rfc3339(ts)
    if parsed is None or parsed.utcoffset() != timedelta(0):
        return None
    return parsed


class WireFormatError(ValueError):
    """A JSON value does not have the shape of an event record."""


@dataclass(frozen=True)
class EventRecord:
    """One ledger entry. Immutable after construction; safe to share."""

    event_id: str
    timestamp: str
    system: str
    actor: str
    event_type: str
    model_id: str | None
    dataset_id: str | None
    deployment_id: str | None
    details: Any
    prev_hash: str
    curr_hash: str
    sig: Signature | None = None

    def to_wire(self) -> dict[str, Any]:
        wire = payload_of(self)
        wire["prev_hash"] = self.prev_hash
        wire["curr_hash"] = self.curr_hash
        if self.sig is not None:
            wire["sig"] = self.sig.to_wire()
        return wire


_WIRE_KEYS = frozenset(
    {
        "event_id", "timestamp", "system", "actor", "event_type",
        "model_id", "dataset_id", "deployment_id", "details",
        "prev_hash", "curr_hash", "sig",
    }
)
_REQUIRED_WIRE_STR_KEYS = (
    "event_id", "timestamp", "system", "actor", "event_type", "prev_hash", "curr_hash",
)


def record_from_wire(obj: Any) -> EventRecord:
    """Build a record from a parsed JSON object.

    Unknown top-level keys are rejected: the core schema is closed, and
    tolerating extras would let a mutated field name slip past the hash check
    when the mutated field happened to be null.
    """
    if not isinstance(obj, dict):
        raise WireFormatError("event record must be a JSON object")
    unknown = set(obj) - _WIRE_KEYS
    if unknown:
        raise WireFormatError(f"unknown field(s): {sorted(unknown)}")
    for key in _REQUIRED_WIRE_STR_KEYS:
        if key not in obj:
            raise WireFormatError(f"missing field: {key}")
        if not isinstance(obj[key], str):
            raise WireFormatError(f"field {key} must be a string")
    for key in SCOPE_KEYS:
        if obj.get(key) is not None and not isinstance(obj[key], str):
            raise WireFormatError(f"field {key} must be a string or null")
    sig_obj = obj.get("sig")
    try:
        sig = Signature.from_wire(sig_obj) if sig_obj is not None else None
    except ValueError as exc:
        raise WireFormatError(str(exc)) from exc
    return EventRecord(
        event_id=obj["event_id"],
        timestamp=obj["timestamp"],
        system=obj["system"],
        actor=obj["actor"],
        event_type=obj["event_type"],
        model_id=obj.get("model_id"),
        dataset_id=obj.get("dataset_id"),
        deployment_id=obj.get("deployment_id"),
        details=obj.get("details"),
        prev_hash=obj["prev_hash"],
        curr_hash=obj["curr_hash"],
        sig=sig,
    )


def payload_of(record: EventRecord) -> dict[str, Any]:
    """The hashed portion of a record: everything except integrity fields.

    Absent scope ids appear as explicit null so the canonical bytes are
    unambiguous.
    """
    return {
        "event_id": record.event_id,
        "timestamp": record.timestamp,
        "system": record.system,
        "actor": record.actor,
        "event_type": record.event_type,
        "model_id": record.model_id,
        "dataset_id": record.dataset_id,
        "deployment_id": record.deployment_id,
        "details": record.details,
    }


@dataclass(frozen=True)
class SchemaViolation:
    field: str
    rule: str
    severity: str = "error"  # "error" | "warning"

    def to_wire(self) -> dict[str, str]:
        return {"field": self.field, "rule": self.rule, "severity": self.severity}

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


def _non_empty_str(value: Any) -> bool:
    return isinstance(value, str) and len(value) > 0


def _decision_violations(event_type: str, details: Any) -> Iterator[SchemaViolation]:
    if not isinstance(details, dict):
        yield SchemaViolation("details", "governance events require structured decision details")
        return
    if not _non_empty_str(details.get("owner")):
        yield SchemaViolation("details.owner", "must be a non-empty string")
    if not _non_empty_str(details.get("rationale_or_statement")):
        yield SchemaViolation("details.rationale_or_statement", "must be a non-empty string")
    scope = details.get("scope")
    if not isinstance(scope, dict) or not scope:
        yield SchemaViolation("details.scope", "must be a non-empty map")
        scope = {}
    else:
        for key, value in scope.items():
            if not _non_empty_str(value):
                yield SchemaViolation(f"details.scope.{key}", "must be a non-empty string")
    for field in ("constraints", "references"):
        value = details.get(field)
        if value is not None and (
            not isinstance(value, list) or not all(isinstance(v, str) for v in value)
        ):
            yield SchemaViolation(f"details.{field}", "must be a list of strings")
    expires = details.get("expires")
    if expires is not None:
        if event_type != EventType.RISK_WAIVER.value:
            yield SchemaViolation("details.expires", "only allowed on RiskWaiver events")
        if parse_rfc3339_utc(expires) is None:
            yield SchemaViolation("details.expires", "must be an RFC3339 UTC instant")


def payload_violations(payload: dict[str, Any], mode: str = STRICT) -> list[SchemaViolation]:
    """Schema checks over the hashed payload fields (no integrity fields).

    Used both by full-record validation and by the appender before the chain
    digest exists.
    """
    if mode not in (STRICT, LENIENT):
        raise ValueError(f"mode must be {STRICT!r} or {LENIENT!r}")
    violations: list[SchemaViolation] = []

    if not isinstance(payload.get("event_id"), str) or not _UUID_RE.match(payload["event_id"]):
        violations.append(SchemaViolation("event_id", "must be a canonical lowercase UUID"))
    if parse_rfc3339_utc(payload.get("timestamp")) is None:
        violations.append(SchemaViolation("timestamp", "must be an RFC3339 UTC instant"))
    for field in ("system", "actor"):
        if not _non_empty_str(payload.get(field)):
            violations.append(SchemaViolation(field, "must be a non-empty string"))

    event_type = payload.get("event_type")
    if not _non_empty_str(event_type):
        violations.append(SchemaViolation("event_type", "must be a non-empty string"))
        event_type = ""
    elif event_type not in ALL_EVENT_TYPES:
        severity = "error" if mode == STRICT else "warning"
        violations.append(SchemaViolation("event_type", f"unknown event type {event_type!r}", severity))

    scope_values = {}
    for field in SCOPE_KEYS:
        value = payload.get(field)
        if value is not None and not _non_empty_str(value):
            violations.append(SchemaViolation(field, "must be a non-empty string or null"))
        scope_values[field] = value if _non_empty_str(value) else None

    try:
        canonical_serialize(payload.get("details"))
    except NonCanonicalizable as exc:
        violations.append(SchemaViolation("details", f"not canonicalizable: {exc}"))
        return violations

    if event_type in SCOPED_TECHNICAL_TYPES and not any(scope_values.values()):
        violations.append(
            SchemaViolation(
                "scope", "technical events must carry at least one of model_id/dataset_id/deployment_id"
            )
        )
    if event_type in GOVERNANCE_TYPES:
        violations.extend(_decision_violations(event_type, payload.get("details")))
        # A decision's scope is queryable only through the top-level ids.
        scope = payload.get("details", {}).get("scope") if isinstance(payload.get("details"), dict) else None
        if isinstance(scope, dict):
            for key in SCOPE_KEYS:
                if key in scope and scope_values.get(key) != scope[key]:
                    violations.append(
                        SchemaViolation(key, f"governance scope names {key} but the top-level field differs")
                    )
    return violations


def validate_event(record: EventRecord, mode: str = STRICT) -> list[SchemaViolation]:
    """All schema violations for a record; empty means well-formed.

    Structural checks only: chain and signature replay belong to the verifier.
    Lenient mode downgrades an unknown event type to a warning so foreign
    taxonomy extensions survive the read path.
    """
    violations = payload_violations(payload_of(record), mode)
    if not is_prev_hash(record.prev_hash):
        violations.append(
            SchemaViolation("prev_hash", f"must be 64 lowercase hex chars or {GENESIS!r}")
        )
    if not is_hash(record.curr_hash):
        violations.append(SchemaViolation("curr_hash", "must be 64 lowercase hex chars"))
    return violations
