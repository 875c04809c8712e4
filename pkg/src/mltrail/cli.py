"""Command-line surface: ledger maintenance, capture, governance checkpoints,
auditor workflows, federation, and the ingest service."""

from __future__ import annotations

import getpass
import json
import os
import sys
from pathlib import Path
from typing import Any

import click

from .canonical import canonical_dumps, loads_strict
from .chain import generate_keypair, load_key, load_trust_dir, save_key
from .events import SCOPE_KEYS, EventRecord
from .federation import (
    FederationError,
    export_evidence,
    load_package,
    load_pointer,
    publish_pointer,
    save_package,
    save_pointer,
    verify_pointer,
)
from .governance import (
    COMMAND_KINDS,
    DEFAULT_PROMPT_CONFIG,
    MissingRequiredField,
    load_prompt_config,
    record_decision,
    suggest_identifiers,
)
from .profiles import ProfileError, evaluate, load_profile
from .query import EventFilter, diff_releases, filter_events, timeline
from .service import ServiceConfig, create_app
from .store import EventDraft, Ledger, LedgerError, open_ledger, read_ledger
from .verify import verify_log


def _default_actor() -> str:
    try:
        return getpass.getuser()
    except (KeyError, OSError):
        return "unknown"


def _load_details(text: str | None) -> Any:
    if text is None:
        return None
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text(encoding="utf-8")
        except OSError as exc:
            raise click.ClickException(f"cannot read details file: {exc}")
    try:
        return loads_strict(text)
    except ValueError as exc:
        raise click.ClickException(f"details is not valid JSON: {exc}")


def _open_for_write(log_path: Path, sign_key: Path | None, create: bool = False) -> Ledger:
    key = load_key(sign_key) if sign_key else None
    try:
        return open_ledger(log_path, writer_key=key, create=create)
    except LedgerError as exc:
        raise click.ClickException(str(exc))


def _records_or_die(log_path: Path) -> list[EventRecord]:
    try:
        result = read_ledger(log_path)
    except LedgerError as exc:
        raise click.ClickException(str(exc))
    for error in result.errors:
        click.echo(f"warning: line {error.line_number}: {error.message}", err=True)
    return result.records


def _echo_json(payload: Any) -> None:
    click.echo(canonical_dumps(payload))


@click.group()
@click.version_option(package_name="mltrail")
def main() -> None:
    """Tamper-evident audit trails for model lifecycles."""


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
def init(log_path: Path) -> None:
    """Create an empty ledger and its identity sidecar."""
    ledger = _open_for_write(log_path, None, create=True)
    click.echo(f"initialized {log_path} (log_id {ledger.log_id})")


@main.command()
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def keygen(out_path: Path) -> None:
    """Generate a writer keypair; writes <out> and a public-only <out>.pub.json."""
    key = generate_keypair()
    save_key(key, out_path, include_private=True)
    public_path = Path(str(out_path) + ".pub.json")
    save_key(key, public_path, include_private=False)
    click.echo(f"key_id {key.key_id}")
    click.echo(f"private+public: {out_path}")
    click.echo(f"public only:    {public_path}")


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.option("--type", "event_type", required=True)
@click.option("--system", default="cli", show_default=True)
@click.option("--actor", default=_default_actor)
@click.option("--model-id", default=None)
@click.option("--dataset-id", default=None)
@click.option("--deployment-id", default=None)
@click.option("--details", "details_text", default=None, help="inline JSON or @file")
@click.option("--timestamp", default=None, help="override the event timestamp (fixtures)")
@click.option("--sign-key", type=click.Path(path_type=Path), default=None)
@click.option("--json", "as_json", is_flag=True, help="print the full record")
def append(
    log_path: Path,
    event_type: str,
    system: str,
    actor: str,
    model_id: str | None,
    dataset_id: str | None,
    deployment_id: str | None,
    details_text: str | None,
    timestamp: str | None,
    sign_key: Path | None,
    as_json: bool,
) -> None:
    """Append one event to a ledger."""
    ledger = _open_for_write(log_path, sign_key)
    draft = EventDraft(
        event_type=event_type,
        system=system,
        actor=actor,
        details=_load_details(details_text),
        model_id=model_id,
        dataset_id=dataset_id,
        deployment_id=deployment_id,
        timestamp=timestamp,
    )
    try:
        record = ledger.append(draft)
    except LedgerError as exc:
        raise click.ClickException(str(exc))
    if as_json:
        _echo_json(record.to_wire())
    else:
        click.echo(f"appended {record.event_type} {record.event_id}")


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.option("--trust", "trust_dir", type=click.Path(path_type=Path), default=None,
              help="directory of public key envelopes")
@click.option("--json", "as_json", is_flag=True)
def verify(log_path: Path, trust_dir: Path | None, as_json: bool) -> None:
    """Replay the hash chain (and signatures); exit 0 iff valid."""
    trust = load_trust_dir(trust_dir) if trust_dir else None
    try:
        report = verify_log(log_path, trust=trust)
    except LedgerError as exc:
        raise click.ClickException(str(exc))
    if as_json:
        _echo_json(report.to_wire())
    else:
        click.echo(f"valid: {report.valid}  events_checked: {report.events_checked}")
        if report.first_mismatch is not None:
            click.echo(f"first_mismatch: {report.first_mismatch} ({report.mismatch_kind})")
        for key_id in report.key_warnings:
            click.echo(f"warning: no trust anchor for signer {key_id}")
    sys.exit(0 if report.valid else 1)


def _filter_options(include_actor_system: bool = True):
    options = [
        click.option("--model-id", default=None),
        click.option("--dataset-id", default=None),
        click.option("--deployment-id", default=None),
        click.option("--type", "event_types", multiple=True),
        click.option("--from", "time_from", default=None),
        click.option("--to", "time_to", default=None),
    ]
    if include_actor_system:
        options.append(click.option("--actor", "actor_filter", default=None))
        options.append(click.option("--system", "system_filter", default=None))

    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


def _build_filter(
    model_id,
    dataset_id,
    deployment_id,
    event_types,
    time_from,
    time_to,
    actor_filter=None,
    system_filter=None,
) -> EventFilter:
    try:
        return EventFilter(
            model_id=model_id,
            dataset_id=dataset_id,
            deployment_id=deployment_id,
            event_types=frozenset(event_types) or None,
            time_from=time_from,
            time_to=time_to,
            actor=actor_filter,
            system=system_filter,
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@_filter_options()
@click.option("--json/--table", "as_json", default=False)
def query(log_path: Path, as_json: bool, **filter_kwargs) -> None:
    """Filter the event stream; conjunction of all given fields."""
    flt = _build_filter(**filter_kwargs)
    records = filter_events(_records_or_die(log_path), flt)
    if as_json:
        _echo_json([record.to_wire() for record in records])
        return
    for record in records:
        scope = " ".join(
            f"{key}={getattr(record, key)}" for key in SCOPE_KEYS if getattr(record, key)
        )
        click.echo(f"{record.timestamp}  {record.event_type:<26} {scope}  {record.event_id}")


@main.command(name="timeline")
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.option("--scope", "scope_spec", required=True, help="model_id=...|dataset_id=...|deployment_id=...")
@click.option("--json", "as_json", is_flag=True)
def timeline_cmd(log_path: Path, scope_spec: str, as_json: bool) -> None:
    """Time-aligned view of one model / dataset / deployment."""
    key, sep, value = scope_spec.partition("=")
    if not sep or key not in SCOPE_KEYS or not value:
        raise click.ClickException(f"--scope must look like model_id=m1 (keys: {', '.join(SCOPE_KEYS)})")
    try:
        rows = timeline(_records_or_die(log_path), key, value)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if as_json:
        _echo_json([row.to_wire() for row in rows])
        return
    for row in rows:
        click.echo(f"{row.timestamp}  {row.event_type:<26} {row.summary}")


@main.command(name="diff")
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.argument("event_id_a")
@click.argument("event_id_b")
@click.option("--json", "as_json", is_flag=True)
def diff_cmd(log_path: Path, event_id_a: str, event_id_b: str, as_json: bool) -> None:
    """Structural diff of the details of two events."""
    try:
        result = diff_releases(_records_or_die(log_path), event_id_a, event_id_b)
    except KeyError as exc:
        raise click.ClickException(f"unknown event id: {exc.args[0]}")
    if as_json:
        _echo_json(result.to_wire())
        return
    if result.is_empty():
        click.echo("no differences")
        return
    for entry in result.changed:
        click.echo(f"changed {entry.path}: {json.dumps(entry.before)} -> {json.dumps(entry.after)}")
    for entry in result.added:
        click.echo(f"added   {entry.path}: {json.dumps(entry.value)}")
    for entry in result.removed:
        click.echo(f"removed {entry.path}: {json.dumps(entry.value)}")


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.option("--profile", "profile_path", required=True, type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def check(log_path: Path, profile_path: Path, as_json: bool) -> None:
    """Evaluate a compliance profile; exit 0 iff no violations."""
    try:
        profile = load_profile(profile_path)
    except ProfileError as exc:
        raise click.ClickException(str(exc))
    violations = evaluate(profile, _records_or_die(log_path))
    if as_json:
        _echo_json([violation.to_wire() for violation in violations])
    else:
        if not violations:
            click.echo(f"profile {profile.name}: no violations")
        for violation in violations:
            location = violation.event_id or (
                f"gap {violation.gap[0]}..{violation.gap[1]}" if violation.gap else ""
            )
            click.echo(f"[{violation.rule_name}] {violation.description}  ({location})")
    sys.exit(0 if not violations else 1)


def _governance_options(fn):
    options = [
        click.option("--log", "log_path", required=True, type=click.Path(path_type=Path)),
        click.option("--owner", default=None),
        click.option("--rationale", default=None),
        click.option("--statement", default=None),
        click.option("--model-id", default=None),
        click.option("--dataset-id", default=None),
        click.option("--deployment-id", default=None),
        click.option("--scope", "scope_pairs", multiple=True, help="extra scope entries KEY=VALUE"),
        click.option("--constraint", "constraints", multiple=True),
        click.option("--ref", "references", multiple=True),
        click.option("--expires", default=None, help="RFC3339 expiry (waivers only)"),
        click.option("--config", "config_path", type=click.Path(path_type=Path), default=None),
        click.option("--sign-key", type=click.Path(path_type=Path), default=None),
        click.option("--timestamp", default=None, help="override the event timestamp (fixtures)"),
        click.option("--interactive/--no-interactive", "interactive", default=None,
                     help="prompt for missing fields (default: only on a TTY)"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _collect_scope(
    ledger: Ledger,
    model_id: str | None,
    dataset_id: str | None,
    deployment_id: str | None,
    scope_pairs: tuple[str, ...],
    interactive: bool,
) -> dict[str, str]:
    scope: dict[str, str] = {}
    for key, value in (("model_id", model_id), ("dataset_id", dataset_id), ("deployment_id", deployment_id)):
        if value:
            scope[key] = value
    for pair in scope_pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key or not value:
            raise click.ClickException(f"--scope entries must look like KEY=VALUE, got {pair!r}")
        scope[key] = value
    if not scope and interactive:
        for key in SCOPE_KEYS:
            recent = suggest_identifiers(ledger, key)
            hint = f" (recent: {', '.join(recent)})" if recent else ""
            value = click.prompt(f"{key}{hint}", default="", show_default=False)
            if value:
                scope[key] = value
    return scope


def _run_decision(
    command: str,
    log_path: Path,
    owner: str | None,
    rationale: str | None,
    statement: str | None,
    model_id: str | None,
    dataset_id: str | None,
    deployment_id: str | None,
    scope_pairs: tuple[str, ...],
    constraints: tuple[str, ...],
    references: tuple[str, ...],
    expires: str | None,
    config_path: Path | None,
    sign_key: Path | None,
    timestamp: str | None,
    interactive: bool | None,
) -> None:
    if interactive is None:
        interactive = sys.stdin.isatty()
    config = load_prompt_config(config_path) if config_path else DEFAULT_PROMPT_CONFIG
    ledger = _open_for_write(log_path, sign_key)

    inputs: dict[str, Any] = {
        "owner": owner,
        "rationale_or_statement": rationale or statement,
        "constraints": list(constraints),
        "references": list(references),
        "expires": expires,
    }
    for prompt in config.fields_for(command):
        if inputs.get(prompt.field):
            continue
        if interactive:
            value = click.prompt(
                prompt.label,
                default=prompt.default or ("" if not prompt.required else None),
                show_default=prompt.default is not None,
            )
            if value:
                inputs[prompt.field] = value
        # non-interactive: leave missing and let record_decision fail hard
    inputs["scope"] = _collect_scope(
        ledger, model_id, dataset_id, deployment_id, scope_pairs, interactive
    )

    try:
        record = record_decision(
            COMMAND_KINDS[command], inputs, ledger, config=config, timestamp=timestamp
        )
    except (MissingRequiredField, LedgerError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"recorded {record.event_type} {record.event_id}")


@main.command()
@_governance_options
def approve(**kwargs) -> None:
    """Record an Approval decision."""
    _run_decision("approve", **kwargs)


@main.command()
@_governance_options
def waive(**kwargs) -> None:
    """Record a RiskWaiver decision."""
    _run_decision("waive", **kwargs)


@main.command()
@_governance_options
def attest(**kwargs) -> None:
    """Record an Attestation."""
    _run_decision("attest", **kwargs)


@main.group()
def pointer() -> None:
    """Signed cross-organization pointers."""


@pointer.command(name="publish")
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.option("--event", "event_id", required=True)
@click.option("--summary", "summary_fields", multiple=True, help="detail path to include")
@click.option("--sign-key", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--actor", default=_default_actor)
def pointer_publish(
    log_path: Path,
    event_id: str,
    summary_fields: tuple[str, ...],
    sign_key: Path,
    out_path: Path,
    actor: str,
) -> None:
    """Publish a signed pointer to one event."""
    ledger = _open_for_write(log_path, None)
    key = load_key(sign_key)
    try:
        ptr = publish_pointer(ledger, event_id, list(summary_fields), key, actor=actor)
    except (FederationError, KeyError, LedgerError) as exc:
        raise click.ClickException(str(exc))
    save_pointer(ptr, out_path)
    click.echo(f"pointer to {event_id} written to {out_path}")


@pointer.command(name="verify")
@click.argument("pointer_path", type=click.Path(path_type=Path))
@click.option("--key", "key_path", required=True, type=click.Path(path_type=Path))
@click.option("--event-from", "package_path", type=click.Path(path_type=Path), default=None,
              help="evidence package holding the referenced event")
def pointer_verify(pointer_path: Path, key_path: Path, package_path: Path | None) -> None:
    """Verify a pointer's signature (and linkage, given an evidence package)."""
    try:
        ptr = load_pointer(pointer_path)
    except FederationError as exc:
        raise click.ClickException(str(exc))
    key = load_key(key_path)
    event = None
    if package_path is not None:
        try:
            package = load_package(package_path)
        except FederationError as exc:
            raise click.ClickException(str(exc))
        event = next((r for r in package.records if r.event_id == ptr.event_id), None)
        if event is None:
            raise click.ClickException(f"package does not contain event {ptr.event_id}")
    result = verify_pointer(ptr, key.public_key, event=event)
    _echo_json(result.to_wire())
    sys.exit(0 if result.sig_ok and result.event_ok in (True, None) else 1)


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@_filter_options(include_actor_system=False)
@click.option("--sign-key", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--actor", default=_default_actor)
@click.option("--redact-nonmatching", is_flag=True,
              help="blank the details of in-slice records the filter did not select")
def export(
    log_path: Path,
    sign_key: Path,
    out_path: Path,
    actor: str,
    redact_nonmatching: bool,
    **filter_kwargs,
) -> None:
    """Export a bounded, verifiable slice of the ledger as an evidence package."""
    flt = _build_filter(**filter_kwargs)
    ledger = _open_for_write(log_path, None)
    key = load_key(sign_key)
    try:
        package = export_evidence(
            ledger, flt, key, actor=actor, redact_nonmatching=redact_nonmatching
        )
    except (FederationError, LedgerError) as exc:
        raise click.ClickException(str(exc))
    save_package(package, out_path)
    click.echo(
        f"exported {len(package.records)} record(s) "
        f"(anchor {package.anchor_prev_hash[:12]}) to {out_path}"
    )


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.option("--bind", default="127.0.0.1:8420", show_default=True)
@click.option("--token-env", default=None, help="env var holding the static bearer token")
@click.option("--sign-key", type=click.Path(path_type=Path), default=None)
def serve(log_path: Path, bind: str, token_env: str | None, sign_key: Path | None) -> None:
    """Run the HTTP ingest/query service over one ledger."""
    import uvicorn

    token = os.environ.get(token_env) if token_env else None
    if token_env and token is None:
        raise click.ClickException(f"environment variable {token_env} is not set")
    try:
        config = ServiceConfig(
            ledger_path=log_path, bind=bind, sign_key_path=sign_key, auth_token=token
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.option("--spool", "spool_path", required=True, type=click.Path(path_type=Path))
@click.option("--sign-key", type=click.Path(path_type=Path), default=None)
def ingest(log_path: Path, spool_path: Path, sign_key: Path | None) -> None:
    """Append every draft from an emitter spool file, in order."""
    try:
        raw = Path(spool_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise click.ClickException(f"cannot read spool: {exc}")
    drafts = []
    for number, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            drafts.append(EventDraft.from_wire(loads_strict(line)))
        except ValueError as exc:
            raise click.ClickException(f"spool line {number}: {exc}")
    ledger = _open_for_write(log_path, sign_key)
    for draft in drafts:
        try:
            ledger.append(draft)
        except LedgerError as exc:
            raise click.ClickException(str(exc))
    click.echo(f"ingested {len(drafts)} draft(s) from {spool_path}")


if __name__ == "__main__":
    main()
