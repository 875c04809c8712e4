"""Scoped reconstruction and comparison over an event stream.

Ledger position is the ordering authority everywhere here; timestamps are
displayed and used for time-range filtering but never trusted to order events
within one ledger.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .canonical import canonical_dumps
from .events import SCOPE_KEYS, EventRecord, parse_rfc3339


class UnknownEventId(KeyError):
    pass


@dataclass(frozen=True)
class EventFilter:
    """Conjunction of exact-match fields; unset fields do not constrain."""

    model_id: str | None = None
    dataset_id: str | None = None
    deployment_id: str | None = None
    event_types: frozenset[str] | None = None
    time_from: str | None = None
    time_to: str | None = None
    actor: str | None = None
    system: str | None = None

    def __post_init__(self) -> None:
        if self.event_types is not None:
            object.__setattr__(self, "event_types", frozenset(self.event_types))
        for bound in ("time_from", "time_to"):
            value = getattr(self, bound)
            if value is not None and parse_rfc3339(value) is None:
                raise ValueError(f"{bound} is not an RFC3339 instant: {value!r}")
        if self.time_from is not None and self.time_to is not None:
            if parse_rfc3339(self.time_from) > parse_rfc3339(self.time_to):
                raise ValueError("time_from must not be after time_to")

    def matches(self, record: EventRecord) -> bool:
        for key in ("model_id", "dataset_id", "deployment_id", "actor", "system"):
            wanted = getattr(self, key)
            if wanted is not None and getattr(record, key) != wanted:
                return False
        if self.event_types is not None and record.event_type not in self.event_types:
            return False
        if self.time_from is not None or self.time_to is not None:
            instant = parse_rfc3339(record.timestamp)
            if instant is None:
                return False
            if self.time_from is not None and instant < parse_rfc3339(self.time_from):
                return False
            # inclusive lower bound, exclusive upper bound
            if self.time_to is not None and instant >= parse_rfc3339(self.time_to):
                return False
        return True

    def describe(self) -> str:
        """Deterministic one-line rendering, used in export access logs."""
        parts = []
        for key in ("model_id", "dataset_id", "deployment_id", "actor", "system"):
            value = getattr(self, key)
            if value is not None:
                parts.append(f"{key}={value}")
        if self.event_types is not None:
            parts.append("types=" + ",".join(sorted(self.event_types)))
        if self.time_from is not None:
            parts.append(f"from={self.time_from}")
        if self.time_to is not None:
            parts.append(f"to={self.time_to}")
        return " ".join(parts) if parts else "(all events)"


def filter_events(records: Iterable[EventRecord], flt: EventFilter) -> list[EventRecord]:
    """Order-preserving subsequence of records matching every set field."""
    return [record for record in records if flt.matches(record)]


def summarize_details(details: Any, limit: int = 120) -> str:
    """One-line deterministic rendering of a details tree."""
    text = canonical_dumps(details)
    if len(text) <= limit:
        return text
    return text[: limit - 3] + "..."


@dataclass(frozen=True)
class TimelineRow:
    timestamp: str
    event_type: str
    event_id: str
    summary: str

    def to_wire(self) -> dict[str, str]:
        return {
            "timestamp": self.timestamp,
            "event_type": self.event_type,
            "event_id": self.event_id,
            "summary": self.summary,
        }


def timeline(
    records: Sequence[EventRecord], scope_key: str, scope_value: str
) -> list[TimelineRow]:
    """Compact, ledger-ordered view of every event carrying one scoped id."""
    if scope_key not in SCOPE_KEYS:
        raise ValueError(f"scope_key must be one of {SCOPE_KEYS}")
    if not scope_value:
        raise ValueError("scope_value must be non-empty")
    flt = EventFilter(**{scope_key: scope_value})
    return [
        TimelineRow(
            timestamp=record.timestamp,
            event_type=record.event_type,
            event_id=record.event_id,
            summary=summarize_details(record.details),
        )
        for record in filter_events(records, flt)
    ]


@dataclass(frozen=True)
class ChangedPath:
    path: str
    before: Any
    after: Any


@dataclass(frozen=True)
class PathValue:
    path: str
    value: Any


@dataclass(frozen=True)
class ReleaseDiff:
    """Structural difference between the details of two events."""

    base_event_id: str
    other_event_id: str
    changed: tuple[ChangedPath, ...] = ()
    added: tuple[PathValue, ...] = ()
    removed: tuple[PathValue, ...] = ()

    def is_empty(self) -> bool:
        return not (self.changed or self.added or self.removed)

    def to_wire(self) -> dict[str, Any]:
        return {
            "base_event_id": self.base_event_id,
            "other_event_id": self.other_event_id,
            "changed": [
                {"path": c.path, "before": c.before, "after": c.after} for c in self.changed
            ],
            "added": [{"path": a.path, "value": a.value} for a in self.added],
            "removed": [{"path": r.path, "value": r.value} for r in self.removed],
        }


def _diff_tree(
    base: Any,
    other: Any,
    path: str,
    changed: list[ChangedPath],
    added: list[PathValue],
    removed: list[PathValue],
) -> None:
    if isinstance(base, dict) and isinstance(other, dict):
        for key in sorted(set(base) | set(other)):
            child = f"{path}/{key}"
            if key not in other:
                removed.append(PathValue(child, base[key]))
            elif key not in base:
                added.append(PathValue(child, other[key]))
            else:
                _diff_tree(base[key], other[key], child, changed, added, removed)
        return
    if base != other:
        changed.append(ChangedPath(path or "/", base, other))


def diff_releases(
    records: Sequence[EventRecord], event_id_a: str, event_id_b: str
) -> ReleaseDiff:
    """Recursive diff of the details of two events, keyed by slash paths.

    Lists are treated as leaf values; top-level record fields (actor, system,
    timestamps) are the timeline's business, not the diff's.
    """
    by_id = {record.event_id: record for record in records}
    for event_id in (event_id_a, event_id_b):
        if event_id not in by_id:
            raise UnknownEventId(event_id)
    changed: list[ChangedPath] = []
    added: list[PathValue] = []
    removed: list[PathValue] = []
    _diff_tree(by_id[event_id_a].details, by_id[event_id_b].details, "", changed, added, removed)
    return ReleaseDiff(
        base_event_id=event_id_a,
        other_event_id=event_id_b,
        changed=tuple(sorted(changed, key=lambda c: c.path)),
        added=tuple(sorted(added, key=lambda a: a.path)),
        removed=tuple(sorted(removed, key=lambda r: r.path)),
    )


def order_check(
    records: Iterable[EventRecord], earlier: EventFilter, later: EventFilter
) -> bool:
    """True iff every record matching ``later`` has some record matching
    ``earlier`` strictly before it in ledger order. Vacuously true when
    nothing matches ``later``."""
    seen_earlier = False
    for record in records:
        if later.matches(record) and not seen_earlier:
            return False
        if earlier.matches(record):
            seen_earlier = True
    return True
