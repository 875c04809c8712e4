"""Cross-organization linkage without full log sharing.

Two interchange artifacts, both canonical-JSON files: signed pointers (a
reference to one event plus a projection of non-sensitive detail paths,
signed by the publisher) and evidence packages (a contiguous ledger slice
with its anchor hash and a head attestation). Publishing a pointer and
creating an export are themselves logged into the source ledger.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .canonical import canonical_serialize, loads_strict
from .chain import Signature, UnsupportedAlgorithm, WriterKey, sign_bytes, sign_hash, verify_bytes, verify_signature
from .events import EventRecord, EventType, now_rfc3339, record_from_wire
from .query import EventFilter, UnknownEventId
from .store import EventDraft, Ledger, redact_record


class FederationError(Exception):
    pass


class MissingPath(FederationError):
    pass


class EmptySelection(FederationError):
    pass


def project_path(details: Any, path: str) -> Any:
    """Value at a slash-separated key path into a details tree."""
    node = details
    for part in path.lstrip("/").split("/"):
        if not isinstance(node, dict) or part not in node:
            raise MissingPath(path)
        node = node[part]
    return node


@dataclass(frozen=True)
class SignedPointer:
    """Reference to one event in some other party's ledger, with just enough
    signed content to verify linkage without the underlying log."""

    store_uri: str
    log_id: str
    event_id: str
    summary: dict[str, Any]
    curr_hash: str
    sig: Signature

    def signing_payload(self) -> dict[str, Any]:
        return {
            "store_uri": self.store_uri,
            "log_id": self.log_id,
            "event_id": self.event_id,
            "summary": self.summary,
            "curr_hash": self.curr_hash,
        }

    def to_wire(self) -> dict[str, Any]:
        wire = self.signing_payload()
        wire["sig"] = self.sig.to_wire()
        return wire

    @classmethod
    def from_wire(cls, obj: Any) -> "SignedPointer":
        if not isinstance(obj, dict):
            raise FederationError("pointer must be a JSON object")
        expected = {"store_uri", "log_id", "event_id", "summary", "curr_hash", "sig"}
        if set(obj) != expected:
            raise FederationError(f"pointer fields must be exactly {sorted(expected)}")
        for key in ("store_uri", "log_id", "event_id", "curr_hash"):
            if not isinstance(obj[key], str):
                raise FederationError(f"pointer field {key} must be a string")
        if not isinstance(obj["summary"], dict):
            raise FederationError("pointer summary must be a map")
        try:
            sig = Signature.from_wire(obj["sig"])
        except ValueError as exc:
            raise FederationError(str(exc)) from exc
        return cls(
            store_uri=obj["store_uri"],
            log_id=obj["log_id"],
            event_id=obj["event_id"],
            summary=obj["summary"],
            curr_hash=obj["curr_hash"],
            sig=sig,
        )


@dataclass(frozen=True)
class PointerCheck:
    sig_ok: bool
    event_ok: bool | None = None

    def to_wire(self) -> dict[str, Any]:
        return {"sig_ok": self.sig_ok, "event_ok": self.event_ok}


@dataclass(frozen=True)
class EvidencePackage:
    """Bounded export: a contiguous slice with its integrity metadata."""

    source_log_id: str
    anchor_prev_hash: str
    records: tuple[EventRecord, ...]
    head_attestation: Signature
    created_at: str
    filter_description: str
    redacted_indices: tuple[int, ...] = ()

    def to_wire(self) -> dict[str, Any]:
        return {
            "source_log_id": self.source_log_id,
            "anchor_prev_hash": self.anchor_prev_hash,
            "records": [record.to_wire() for record in self.records],
            "head_attestation": self.head_attestation.to_wire(),
            "created_at": self.created_at,
            "filter_description": self.filter_description,
            "redacted_indices": list(self.redacted_indices),
        }

    @classmethod
    def from_wire(cls, obj: Any) -> "EvidencePackage":
        if not isinstance(obj, dict):
            raise FederationError("package must be a JSON object")
        expected = {
            "source_log_id", "anchor_prev_hash", "records", "head_attestation",
            "created_at", "filter_description", "redacted_indices",
        }
        if set(obj) != expected:
            raise FederationError(f"package fields must be exactly {sorted(expected)}")
        if not isinstance(obj["records"], list):
            raise FederationError("package records must be a list")
        try:
            records = tuple(record_from_wire(r) for r in obj["records"])
            attestation = Signature.from_wire(obj["head_attestation"])
        except ValueError as exc:
            raise FederationError(str(exc)) from exc
        redacted = obj["redacted_indices"]
        if not isinstance(redacted, list) or not all(isinstance(i, int) for i in redacted):
            raise FederationError("redacted_indices must be a list of integers")
        return cls(
            source_log_id=str(obj["source_log_id"]),
            anchor_prev_hash=str(obj["anchor_prev_hash"]),
            records=records,
            head_attestation=attestation,
            created_at=str(obj["created_at"]),
            filter_description=str(obj["filter_description"]),
            redacted_indices=tuple(redacted),
        )


def publish_pointer(
    ledger: Ledger,
    event_id: str,
    summary_fields: Sequence[str],
    key: WriterKey,
    actor: str = "auditor",
) -> SignedPointer:
    """Signed reference to one event, carrying only the named detail paths.

    A PointerPublished event is appended to the source ledger afterwards, so
    the act of sharing is itself on the record.
    """
    records = _readable_records(ledger)
    target = next((r for r in records if r.event_id == event_id), None)
    if target is None:
        raise UnknownEventId(event_id)
    summary = {path: project_path(target.details, path) for path in summary_fields}
    payload = {
        "store_uri": f"file://{Path(ledger.path).resolve()}",
        "log_id": ledger.log_id,
        "event_id": event_id,
        "summary": summary,
        "curr_hash": target.curr_hash,
    }
    sig = sign_bytes(key, canonical_serialize(payload))
    pointer = SignedPointer(sig=sig, **payload)
    ledger.append(
        EventDraft(
            event_type=EventType.POINTER_PUBLISHED.value,
            system="federation",
            actor=actor,
            details={
                "event_id": event_id,
                "summary_fields": list(summary_fields),
                "key_id": key.key_id,
            },
        )
    )
    return pointer


def verify_pointer(
    pointer: SignedPointer,
    publisher_key: bytes,
    event: EventRecord | None = None,
) -> PointerCheck:
    """Check the publisher signature and, when the referenced event is at hand
    (e.g. from an evidence package), its linkage to the pointer content."""
    try:
        sig_ok = verify_bytes(
            pointer.sig, canonical_serialize(pointer.signing_payload()), publisher_key
        )
    except UnsupportedAlgorithm:
        sig_ok = False
    if event is None:
        return PointerCheck(sig_ok=sig_ok)
    event_ok = event.event_id == pointer.event_id and event.curr_hash == pointer.curr_hash
    if event_ok:
        try:
            event_ok = all(
                project_path(event.details, path) == value
                for path, value in pointer.summary.items()
            )
        except MissingPath:
            event_ok = False
    return PointerCheck(sig_ok=sig_ok, event_ok=event_ok)


def export_evidence(
    ledger: Ledger,
    flt: EventFilter,
    key: WriterKey,
    actor: str = "auditor",
    redact_nonmatching: bool = False,
) -> EvidencePackage:
    """Package the smallest contiguous slice covering every filter match.

    Contiguity keeps verification identical to the core chain replay. With
    ``redact_nonmatching``, bystander records inside the slice keep their
    integrity fields but have their details replaced by the redaction marker;
    the package flags them, and segment verification reports them as
    unverifiable content. An ExportCreated event is appended afterwards.
    """
    records = _readable_records(ledger)
    matches = [i for i, record in enumerate(records) if flt.matches(record)]
    if not matches:
        raise EmptySelection(flt.describe())
    first, last = min(matches), max(matches)
    window = list(records[first : last + 1])
    redacted: list[int] = []
    if redact_nonmatching:
        matched = set(matches)
        for offset in range(len(window)):
            if (first + offset) not in matched:
                window[offset] = redact_record(window[offset])
                redacted.append(offset)
    package = EvidencePackage(
        source_log_id=ledger.log_id,
        anchor_prev_hash=window[0].prev_hash,
        records=tuple(window),
        head_attestation=sign_hash(key, window[-1].curr_hash),
        created_at=now_rfc3339(),
        filter_description=flt.describe(),
        redacted_indices=tuple(redacted),
    )
    ledger.append(
        EventDraft(
            event_type=EventType.EXPORT_CREATED.value,
            system="federation",
            actor=actor,
            details={
                "filter_description": package.filter_description,
                "record_count": len(package.records),
                "first_event_id": package.records[0].event_id,
                "last_event_id": package.records[-1].event_id,
                "redacted_count": len(redacted),
            },
        )
    )
    return package


def attestation_ok(package: EvidencePackage, publisher_key: bytes) -> bool:
    """Does the head attestation cover the package's final record?"""
    if not package.records:
        return False
    try:
        return verify_signature(
            package.head_attestation, package.records[-1].curr_hash, publisher_key
        )
    except UnsupportedAlgorithm:
        return False


def _readable_records(ledger: Ledger) -> list[EventRecord]:
    result = ledger.read_all()
    if result.errors:
        raise FederationError(
            f"ledger has {len(result.errors)} unparseable line(s); verify before sharing"
        )
    return result.records


def save_pointer(pointer: SignedPointer, path: Path | str) -> None:
    Path(path).write_bytes(canonical_serialize(pointer.to_wire()) + b"\n")


def load_pointer(path: Path | str) -> SignedPointer:
    try:
        return SignedPointer.from_wire(loads_strict(Path(path).read_bytes()))
    except (OSError, ValueError) as exc:
        raise FederationError(f"cannot load pointer {path}: {exc}") from exc


def save_package(package: EvidencePackage, path: Path | str) -> None:
    Path(path).write_bytes(canonical_serialize(package.to_wire()) + b"\n")


def load_package(path: Path | str) -> EvidencePackage:
    try:
        return EvidencePackage.from_wire(loads_strict(Path(path).read_bytes()))
    except (OSError, ValueError) as exc:
        raise FederationError(f"cannot load package {path}: {exc}") from exc
