"""Declarative sector profiles evaluated over a ledger's event stream.

Profiles are data, not code: a YAML document names the profile and lists
rules of three kinds — require_before (a trigger event needs a prior required
event agreeing on its scope), cadence (recurring events must not be further
apart than a maximum interval), and required_fields (events of a type must
carry certain detail paths). Evaluation audits the record; it never blocks
appends.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Sequence, Union

import yaml

from .events import ALL_EVENT_TYPES, SCOPE_KEYS, EventRecord, parse_rfc3339


class ProfileError(Exception):
    pass


class ParseFailure(ProfileError):
    pass


class UnknownRuleKind(ProfileError):
    pass


class InvalidParameters(ProfileError):
    pass


def parse_duration(text: Any) -> timedelta:
    """ISO-8601 duration limited to weeks/days/hours/minutes/seconds.

    Calendar-dependent components (years, months) are rejected: a cadence
    bound must mean the same number of seconds wherever it is evaluated.
    """
    if not isinstance(text, str) or not text.startswith("P"):
        raise InvalidParameters(f"not an ISO-8601 duration: {text!r}")
    date_part, has_time, time_part = text[1:].partition("T")
    if "Y" in date_part or "M" in date_part:
        raise InvalidParameters(f"calendar-dependent duration components unsupported: {text!r}")
    date_match = re.fullmatch(r"(?:(\d+)W)?(?:(\d+)D)?", date_part)
    time_match = re.fullmatch(r"(?:(\d+)H)?(?:(\d+)M)?(?:(\d+(?:\.\d+)?)S)?", time_part)
    if date_match is None or time_match is None or (has_time and not time_part):
        raise InvalidParameters(f"malformed duration: {text!r}")
    components = date_match.groups() + time_match.groups()
    if not any(components):
        raise InvalidParameters(f"malformed duration: {text!r}")
    weeks, days, hours, minutes, seconds = components
    duration = timedelta(
        weeks=int(weeks or 0),
        days=int(days or 0),
        hours=int(hours or 0),
        minutes=int(minutes or 0),
        seconds=float(seconds or 0),
    )
    if duration <= timedelta(0):
        raise InvalidParameters(f"duration must be positive: {text!r}")
    return duration


@dataclass(frozen=True)
class RequireBeforeRule:
    name: str
    trigger_type: str
    required_type: str
    scope_keys: tuple[str, ...]


@dataclass(frozen=True)
class CadenceRule:
    name: str
    event_type: str
    max_interval: timedelta
    max_interval_text: str
    scope_keys: tuple[str, ...]
    window_from: str | None = None
    window_to: str | None = None


@dataclass(frozen=True)
class RequiredFieldsRule:
    name: str
    event_type: str
    required_detail_paths: tuple[str, ...]


Rule = Union[RequireBeforeRule, CadenceRule, RequiredFieldsRule]


@dataclass(frozen=True)
class Profile:
    name: str
    rules: tuple[Rule, ...]


@dataclass(frozen=True)
class Violation:
    rule_name: str
    description: str
    event_id: str | None = None
    gap: tuple[str, str] | None = None  # (from_instant, to_instant)

    def to_wire(self) -> dict[str, Any]:
        wire: dict[str, Any] = {"rule_name": self.rule_name, "description": self.description}
        if self.event_id is not None:
            wire["event_id"] = self.event_id
        if self.gap is not None:
            wire["gap"] = {"from_instant": self.gap[0], "to_instant": self.gap[1]}
        return wire


def _require_event_type(rule_name: str, field: str, value: Any) -> str:
    if not isinstance(value, str) or value not in ALL_EVENT_TYPES:
        raise InvalidParameters(f"rule {rule_name!r}: {field} must name a known event type, got {value!r}")
    return value


def _require_scope_keys(rule_name: str, value: Any) -> tuple[str, ...]:
    if not isinstance(value, list) or not value:
        raise InvalidParameters(f"rule {rule_name!r}: scope_keys must be a non-empty list")
    for key in value:
        if key not in SCOPE_KEYS:
            raise InvalidParameters(f"rule {rule_name!r}: scope key {key!r} not in {SCOPE_KEYS}")
    return tuple(value)


def _rule_from_dict(obj: Any) -> Rule:
    if not isinstance(obj, dict):
        raise ParseFailure("each rule must be a mapping")
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        raise ParseFailure("rule is missing a name")
    kind = obj.get("kind")
    if kind == "require_before":
        return RequireBeforeRule(
            name=name,
            trigger_type=_require_event_type(name, "trigger_type", obj.get("trigger_type")),
            required_type=_require_event_type(name, "required_type", obj.get("required_type")),
            scope_keys=_require_scope_keys(name, obj.get("scope_keys")),
        )
    if kind == "cadence":
        window = obj.get("window")
        window_from = window_to = None
        if window is not None:
            if (
                not isinstance(window, dict)
                or parse_rfc3339(window.get("from")) is None
                or parse_rfc3339(window.get("to")) is None
            ):
                raise InvalidParameters(f"rule {name!r}: window needs RFC3339 'from' and 'to'")
            window_from, window_to = window["from"], window["to"]
            if parse_rfc3339(window_from) > parse_rfc3339(window_to):
                raise InvalidParameters(f"rule {name!r}: window from after to")
        interval_text = obj.get("max_interval")
        return CadenceRule(
            name=name,
            event_type=_require_event_type(name, "event_type", obj.get("event_type")),
            max_interval=parse_duration(interval_text),
            max_interval_text=str(interval_text),
            scope_keys=_require_scope_keys(name, obj.get("scope_keys")),
            window_from=window_from,
            window_to=window_to,
        )
    if kind == "required_fields":
        paths = obj.get("required_detail_paths")
        if not isinstance(paths, list) or not paths or not all(isinstance(p, str) and p for p in paths):
            raise InvalidParameters(f"rule {name!r}: required_detail_paths must be non-empty strings")
        return RequiredFieldsRule(
            name=name,
            event_type=_require_event_type(name, "event_type", obj.get("event_type")),
            required_detail_paths=tuple(p.lstrip("/") for p in paths),
        )
    raise UnknownRuleKind(f"rule {name!r}: unknown kind {kind!r}")


def profile_from_dict(doc: Any) -> Profile:
    if not isinstance(doc, dict):
        raise ParseFailure("profile document must be a mapping")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ParseFailure("profile is missing a name")
    raw_rules = doc.get("rules", [])
    if not isinstance(raw_rules, list):
        raise ParseFailure("rules must be a list")
    rules = tuple(_rule_from_dict(r) for r in raw_rules)
    names = [r.name for r in rules]
    if len(set(names)) != len(names):
        raise ParseFailure("rule names must be unique within a profile")
    return Profile(name=name, rules=rules)


def load_profile(path: Path | str) -> Profile:
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ParseFailure(f"cannot load profile {path}: {exc}") from exc
    return profile_from_dict(doc)


def _scope_constraints(record: EventRecord, scope_keys: Sequence[str]) -> dict[str, str]:
    """Scope values the record actually carries; missing keys are unconstrained."""
    return {
        key: getattr(record, key)
        for key in scope_keys
        if getattr(record, key) is not None
    }


def _path_present(tree: Any, path: str) -> bool:
    node = tree
    for part in path.split("/"):
        if not isinstance(node, dict) or part not in node:
            return False
        node = node[part]
    return True


def _eval_require_before(
    rule: RequireBeforeRule, records: Sequence[EventRecord]
) -> list[tuple[int, Violation]]:
    found: list[tuple[int, Violation]] = []
    for index, record in enumerate(records):
        if record.event_type != rule.trigger_type:
            continue
        constraints = _scope_constraints(record, rule.scope_keys)
        satisfied = any(
            earlier.event_type == rule.required_type
            and all(getattr(earlier, key) == value for key, value in constraints.items())
            for earlier in records[:index]
        )
        if not satisfied:
            scope_text = (
                ", ".join(f"{k}={v}" for k, v in sorted(constraints.items())) or "any scope"
            )
            found.append(
                (
                    index,
                    Violation(
                        rule_name=rule.name,
                        event_id=record.event_id,
                        description=(
                            f"{rule.trigger_type} ({scope_text}) has no prior "
                            f"{rule.required_type} in scope"
                        ),
                    ),
                )
            )
    return found


def _eval_cadence(rule: CadenceRule, records: Sequence[EventRecord]) -> list[tuple[int, Violation]]:
    window_from = parse_rfc3339(rule.window_from) if rule.window_from else None
    window_to = parse_rfc3339(rule.window_to) if rule.window_to else None

    groups: dict[tuple[str | None, ...], list[tuple[int, datetime, str]]] = {}
    for index, record in enumerate(records):
        if record.event_type != rule.event_type:
            continue
        instant = parse_rfc3339(record.timestamp)
        if instant is None:
            continue  # schema validation owns bad timestamps
        if window_from is not None and not (window_from <= instant <= window_to):
            continue
        key = tuple(getattr(record, k) for k in rule.scope_keys)
        groups.setdefault(key, []).append((index, instant, record.timestamp))

    found: list[tuple[int, Violation]] = []
    for key, occurrences in groups.items():
        points: list[tuple[int, datetime, str]] = []
        if window_from is not None:
            points.append((-1, window_from, rule.window_from or ""))
        points.extend(occurrences)
        if window_to is not None:
            points.append((len(records), window_to, rule.window_to or ""))
        scope_text = ", ".join(
            f"{k}={v}" for k, v in zip(rule.scope_keys, key) if v is not None
        ) or "any scope"
        for (_, start_dt, start_text), (end_index, end_dt, end_text) in zip(points, points[1:]):
            if end_dt - start_dt > rule.max_interval:
                position = end_index if end_index >= 0 else 0
                found.append(
                    (
                        position,
                        Violation(
                            rule_name=rule.name,
                            gap=(start_text, end_text),
                            description=(
                                f"{rule.event_type} gap of {(end_dt - start_dt).days}d "
                                f"exceeds {rule.max_interval_text} ({scope_text})"
                            ),
                        ),
                    )
                )
    return found


def _eval_required_fields(
    rule: RequiredFieldsRule, records: Sequence[EventRecord]
) -> list[tuple[int, Violation]]:
    found: list[tuple[int, Violation]] = []
    for index, record in enumerate(records):
        if record.event_type != rule.event_type:
            continue
        missing = [p for p in rule.required_detail_paths if not _path_present(record.details, p)]
        if missing:
            found.append(
                (
                    index,
                    Violation(
                        rule_name=rule.name,
                        event_id=record.event_id,
                        description="missing detail path(s): " + ", ".join(missing),
                    ),
                )
            )
    return found


def evaluate(profile: Profile, records: Sequence[EventRecord]) -> list[Violation]:
    """Deterministic violation list, ordered by (offending position, rule name)."""
    collected: list[tuple[int, str, Violation]] = []
    for rule in profile.rules:
        if isinstance(rule, RequireBeforeRule):
            results = _eval_require_before(rule, records)
        elif isinstance(rule, CadenceRule):
            results = _eval_cadence(rule, records)
        else:
            results = _eval_required_fields(rule, records)
        collected.extend((position, rule.name, violation) for position, violation in results)
    collected.sort(key=lambda item: (item[0], item[1]))
    return [violation for _, _, violation in collected]
