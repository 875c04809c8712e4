"""Human-authored governance checkpoints: approvals, waivers, attestations.

Decision content is collected per a prompt configuration (YAML-overridable)
and recorded into the same ledger as technical telemetry. Scope identifiers
land both inside the decision details and as top-level ids so filters and
profiles can key on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import yaml

from .events import SCOPE_KEYS, EventRecord, EventType
from .store import EventDraft, Ledger

COMMAND_KINDS = {
    "approve": EventType.APPROVAL.value,
    "waive": EventType.RISK_WAIVER.value,
    "attest": EventType.ATTESTATION.value,
}
KIND_COMMANDS = {kind: command for command, kind in COMMAND_KINDS.items()}

# Fields every decision may carry beyond the prompt-configured ones.
_STRUCTURAL_FIELDS = ("scope", "constraints", "references", "expires")


class PromptConfigError(ValueError):
    pass


class MissingRequiredField(ValueError):
    def __init__(self, field: str):
        super().__init__(f"missing required field: {field}")
        self.field = field


@dataclass(frozen=True)
class PromptField:
    field: str
    label: str
    required: bool = False
    default: str | None = None


@dataclass(frozen=True)
class PromptConfig:
    """Per-command field prompts for the three decision commands."""

    commands: Mapping[str, tuple[PromptField, ...]]

    def fields_for(self, command: str) -> tuple[PromptField, ...]:
        return self.commands[command]


DEFAULT_PROMPT_CONFIG = PromptConfig(
    commands={
        "approve": (
            PromptField("owner", "Decision owner", required=True),
            PromptField("rationale_or_statement", "Rationale", required=True),
        ),
        "waive": (
            PromptField("owner", "Decision owner", required=True),
            PromptField("rationale_or_statement", "Waiver rationale", required=True),
        ),
        "attest": (
            PromptField("owner", "Decision owner", required=True),
            PromptField("rationale_or_statement", "Statement", required=True),
        ),
    }
)


def load_prompt_config(path: Path | str) -> PromptConfig:
    """YAML shape: {approve: [{field, label, required, default}], waive: ..., attest: ...}."""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise PromptConfigError(f"cannot load prompt config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise PromptConfigError("prompt config must be a mapping of commands")
    commands: dict[str, tuple[PromptField, ...]] = {}
    for command in COMMAND_KINDS:
        raw_fields = doc.get(command)
        if raw_fields is None:
            commands[command] = DEFAULT_PROMPT_CONFIG.fields_for(command)
            continue
        if not isinstance(raw_fields, list):
            raise PromptConfigError(f"{command}: fields must be a list")
        fields = []
        for raw in raw_fields:
            if not isinstance(raw, dict) or not isinstance(raw.get("field"), str):
                raise PromptConfigError(f"{command}: each field needs a 'field' name")
            fields.append(
                PromptField(
                    field=raw["field"],
                    label=str(raw.get("label", raw["field"])),
                    required=bool(raw.get("required", False)),
                    default=raw.get("default"),
                )
            )
        required_names = {f.field for f in fields if f.required}
        if not {"owner", "rationale_or_statement"} <= required_names:
            raise PromptConfigError(
                f"{command}: owner and rationale_or_statement must be required fields"
            )
        commands[command] = tuple(fields)
    return PromptConfig(commands=commands)


def record_decision(
    kind: str,
    inputs: Mapping[str, Any],
    ledger: Ledger,
    config: PromptConfig = DEFAULT_PROMPT_CONFIG,
    event_id: str | None = None,
    timestamp: str | None = None,
) -> EventRecord:
    """Append one governance event built from collected inputs.

    ``inputs`` maps DecisionDetails field names to values, plus ``scope`` (a
    map of scope keys to identifiers), ``constraints``, ``references`` and
    ``expires``. Raises MissingRequiredField before touching the ledger.
    """
    if kind not in KIND_COMMANDS:
        raise ValueError(f"kind must be one of {sorted(KIND_COMMANDS)}")
    command = KIND_COMMANDS[kind]

    details: dict[str, Any] = {}
    for prompt in config.fields_for(command):
        value = inputs.get(prompt.field)
        if value is None or value == "":
            value = prompt.default
        if prompt.required and (value is None or value == ""):
            raise MissingRequiredField(prompt.field)
        if value is not None and value != "":
            details[prompt.field] = value

    scope = dict(inputs.get("scope") or {})
    if not scope:
        raise MissingRequiredField("scope")
    details["scope"] = scope
    for field in ("constraints", "references"):
        values = [v for v in (inputs.get(field) or []) if v]
        if values:
            details[field] = list(values)
    if inputs.get("expires"):
        details["expires"] = inputs["expires"]

    draft = EventDraft(
        event_type=kind,
        system="governance",
        actor=str(details.get("owner", "")),
        details=details,
        model_id=scope.get("model_id"),
        dataset_id=scope.get("dataset_id"),
        deployment_id=scope.get("deployment_id"),
        event_id=event_id,
        timestamp=timestamp,
    )
    return ledger.append(draft)


def suggest_identifiers(ledger: Ledger, scope_key: str, limit: int = 10) -> list[str]:
    """Distinct values of one scope key over the log, most recent first."""
    if scope_key not in SCOPE_KEYS:
        raise ValueError(f"scope_key must be one of {SCOPE_KEYS}")
    seen: list[str] = []
    for record in reversed(ledger.read_all().records):
        value = getattr(record, scope_key)
        if value is not None and value not in seen:
            seen.append(value)
            if len(seen) >= limit:
                break
    return seen
