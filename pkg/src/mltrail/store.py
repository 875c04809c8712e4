"""Append-only event persistence over newline-delimited JSON.

One writer at a time per ledger (advisory file lock); any number of readers.
The file is the source of truth: the sidecar ``<name>.jsonl.meta`` holds the
ledger identity and a head cache, but the head is always reconstructed from
the file itself on open and before every append.
"""

from __future__ import annotations

import fcntl
import json
import os
import secrets
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator

from .canonical import canonical_serialize, loads_strict
from .chain import ChainHead, WriterKey, compute_curr_hash, sign_hash
from .events import (
    STRICT,
    EventRecord,
    SchemaViolation,
    WireFormatError,
    new_event_id,
    now_rfc3339,
    payload_violations,
    record_from_wire,
)


class LedgerError(Exception):
    pass


class NotFound(LedgerError):
    pass


class CorruptTail(LedgerError):
    """The final line of the ledger is unparseable. Surfaced, never repaired."""


class LockUnavailable(LedgerError):
    pass


class IoFailure(LedgerError):
    pass


class ValidationFailed(LedgerError):
    def __init__(self, violations: list[SchemaViolation]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


@dataclass(frozen=True)
class EventDraft:
    """Capture-side input: an event before integrity fields are attached.

    event_id and timestamp may be left unset; the appender fills them in.
    """

    event_type: str
    system: str
    actor: str
    details: Any = None
    model_id: str | None = None
    dataset_id: str | None = None
    deployment_id: str | None = None
    timestamp: str | None = None
    event_id: str | None = None

    _WIRE_KEYS = frozenset(
        {
            "event_type", "system", "actor", "details",
            "model_id", "dataset_id", "deployment_id", "timestamp", "event_id",
        }
    )

    def to_wire(self) -> dict[str, Any]:
        wire: dict[str, Any] = {
            "event_type": self.event_type,
            "system": self.system,
            "actor": self.actor,
            "details": self.details,
            "model_id": self.model_id,
            "dataset_id": self.dataset_id,
            "deployment_id": self.deployment_id,
        }
        if self.timestamp is not None:
            wire["timestamp"] = self.timestamp
        if self.event_id is not None:
            wire["event_id"] = self.event_id
        return wire

    @classmethod
    def from_wire(cls, obj: Any) -> "EventDraft":
        if not isinstance(obj, dict):
            raise WireFormatError("event draft must be a JSON object")
        unknown = set(obj) - cls._WIRE_KEYS
        if unknown:
            raise WireFormatError(f"unknown field(s): {sorted(unknown)}")
        for key in ("event_type", "system", "actor"):
            if not isinstance(obj.get(key), str):
                raise WireFormatError(f"field {key} must be a string")
        for key in ("model_id", "dataset_id", "deployment_id", "timestamp", "event_id"):
            if obj.get(key) is not None and not isinstance(obj[key], str):
                raise WireFormatError(f"field {key} must be a string or null")
        return cls(
            event_type=obj["event_type"],
            system=obj["system"],
            actor=obj["actor"],
            details=obj.get("details"),
            model_id=obj.get("model_id"),
            dataset_id=obj.get("dataset_id"),
            deployment_id=obj.get("deployment_id"),
            timestamp=obj.get("timestamp"),
            event_id=obj.get("event_id"),
        )


@dataclass(frozen=True)
class LineError:
    line_number: int  # 1-based
    message: str


@dataclass
class ReadResult:
    records: list[EventRecord] = field(default_factory=list)
    errors: list[LineError] = field(default_factory=list)


def _meta_path(path: Path) -> Path:
    return Path(str(path) + ".meta")


def _lock_path(path: Path) -> Path:
    return Path(str(path) + ".lock")


def _read_meta(path: Path) -> dict[str, Any] | None:
    meta_file = _meta_path(path)
    try:
        obj = loads_strict(meta_file.read_bytes())
    except (OSError, ValueError):
        return None
    return obj if isinstance(obj, dict) else None


def _write_meta(path: Path, meta: dict[str, Any]) -> None:
    meta_file = _meta_path(path)
    tmp = meta_file.with_name(meta_file.name + ".tmp")
    data = (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode("utf-8")
    fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o644)
    try:
        os.write(fd, data)
        os.fsync(fd)
    finally:
        os.close(fd)
    os.replace(tmp, meta_file)


@contextmanager
def _exclusive_lock(lock_file: Path, timeout: float) -> Iterator[None]:
    fd = os.open(lock_file, os.O_CREAT | os.O_RDWR, 0o644)
    try:
        deadline = time.monotonic() + timeout
        while True:
            try:
                fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
                break
            except OSError:
                if time.monotonic() >= deadline:
                    raise LockUnavailable(f"could not acquire writer lock {lock_file}")
                time.sleep(0.01)
        try:
            yield
        finally:
            fcntl.flock(fd, fcntl.LOCK_UN)
    finally:
        os.close(fd)


def _split_lines(data: bytes) -> tuple[list[bytes], bool]:
    """Split ledger bytes into lines; second element is False when the final
    line lacks its newline (interrupted append)."""
    if not data:
        return [], True
    terminated = data.endswith(b"\n")
    parts = data.split(b"\n")
    if terminated:
        parts = parts[:-1]
    return parts, terminated


def _parse_line(raw: bytes) -> EventRecord:
    return record_from_wire(loads_strict(raw))


def _scan_state(path: Path, collect_ids: bool = False) -> tuple[ChainHead, bool, set[str]]:
    """Reconstruct (head, terminated, event_ids) from the file contents.

    event_ids are only gathered when a caller-chosen id must be checked for
    uniqueness; generated UUIDs skip the extra parse pass.
    """
    try:
        data = path.read_bytes()
    except FileNotFoundError as exc:
        raise NotFound(str(path)) from exc
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    lines, terminated = _split_lines(data)
    if not lines:
        return ChainHead(), True, set()
    try:
        last = _parse_line(lines[-1])
    except (ValueError, WireFormatError) as exc:
        raise CorruptTail(f"{path}: last line unparseable: {exc}") from exc
    event_ids: set[str] = set()
    if collect_ids:
        for raw in lines:
            try:
                event_ids.add(str(loads_strict(raw).get("event_id")))
            except (ValueError, AttributeError):
                pass
    return ChainHead(last_hash=last.curr_hash, count=len(lines)), terminated, event_ids


class Ledger:
    """Handle on one ledger file. Not shared mutably across threads; open a
    separate handle per thread."""

    def __init__(
        self,
        path: Path,
        log_id: str,
        head: ChainHead,
        writer_key: WriterKey | None = None,
        lock_timeout: float = 10.0,
    ):
        self.path = path
        self.log_id = log_id
        self.head = head
        self.writer_key = writer_key
        self.lock_timeout = lock_timeout

    def append(self, draft: EventDraft) -> EventRecord:
        """Validate, chain, optionally sign, and persist one event.

        Atomic at line granularity: the head advances only after the line is
        written and flushed, and existing bytes are never touched. A crash can
        leave at most a truncated final line, which later opens surface as
        CorruptTail.
        """
        payload = {
            "event_id": draft.event_id or new_event_id(),
            "timestamp": draft.timestamp or now_rfc3339(),
            "system": draft.system,
            "actor": draft.actor,
            "event_type": draft.event_type,
            "model_id": draft.model_id,
            "dataset_id": draft.dataset_id,
            "deployment_id": draft.deployment_id,
            "details": draft.details,
        }
        violations = payload_violations(payload, STRICT)
        if violations:
            raise ValidationFailed(violations)
        with _exclusive_lock(_lock_path(self.path), self.lock_timeout):
            head, terminated, event_ids = _scan_state(
                self.path, collect_ids=draft.event_id is not None
            )
            if draft.event_id is not None and draft.event_id in event_ids:
                raise ValidationFailed(
                    [SchemaViolation("event_id", "duplicate event_id within this ledger")]
                )
            prev_hash = head.last_hash
            curr_hash = compute_curr_hash(payload, prev_hash)
            sig = sign_hash(self.writer_key, curr_hash) if self.writer_key else None
            record = EventRecord(prev_hash=prev_hash, curr_hash=curr_hash, sig=sig, **payload)
            line = canonical_serialize(record.to_wire()) + b"\n"
            if not terminated:
                line = b"\n" + line
            try:
                with self.path.open("ab") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise IoFailure(str(exc)) from exc
            self.head = ChainHead(last_hash=curr_hash, count=head.count + 1)
            self._cache_head()
        return record

    def read_all(self) -> ReadResult:
        return read_ledger(self.path)

    def _cache_head(self) -> None:
        meta = _read_meta(self.path) or {}
        meta["log_id"] = self.log_id
        meta["head"] = {"last_hash": self.head.last_hash, "count": self.head.count}
        try:
            _write_meta(self.path, meta)
        except OSError:
            pass  # cache only; the file stays authoritative


def open_ledger(
    path: Path | str,
    writer_key: WriterKey | None = None,
    create: bool = False,
    lock_timeout: float = 10.0,
) -> Ledger:
    """Open (or create) a ledger, reconstructing the chain head from the file.

    The sidecar meta holds the stable log_id; when it is missing for an
    existing file a fresh identity is generated and persisted.
    """
    path = Path(path)
    if not path.exists():
        if not create:
            raise NotFound(str(path))
        path.parent.mkdir(parents=True, exist_ok=True)
        path.touch()
    meta = _read_meta(path)
    if meta is None or not isinstance(meta.get("log_id"), str):
        # identity creation races with other openers; settle it under the lock
        with _exclusive_lock(_lock_path(path), lock_timeout):
            meta = _read_meta(path)
            if meta is None or not isinstance(meta.get("log_id"), str):
                meta = {"log_id": secrets.token_hex(16), "created_at": now_rfc3339()}
                _write_meta(path, meta)
    head, _, _ = _scan_state(path)
    return Ledger(
        path=path,
        log_id=meta["log_id"],
        head=head,
        writer_key=writer_key,
        lock_timeout=lock_timeout,
    )


def read_ledger(path: Path | str) -> ReadResult:
    """All parseable records in file order plus line-level errors."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    lines, _ = _split_lines(data)
    result = ReadResult()
    for number, raw in enumerate(lines, start=1):
        try:
            result.records.append(_parse_line(raw))
        except (ValueError, WireFormatError) as exc:
            result.errors.append(LineError(line_number=number, message=str(exc)))
    return result


REDACTION_MARKER: dict[str, Any] = {"_redacted": True}


def redact_record(record: EventRecord) -> EventRecord:
    """Copy of a record with its details replaced by the redaction marker.

    The integrity fields are kept, so the chain still links through the
    record; its content simply becomes unverifiable and is flagged as such by
    segment verification.
    """
    return replace(record, details=dict(REDACTION_MARKER))


def is_redacted(record: EventRecord) -> bool:
    return record.details == REDACTION_MARKER
