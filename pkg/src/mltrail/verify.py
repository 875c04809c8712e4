"""Chain and signature replay over a ledger file or an exported segment.

Verification is the read-side integrity authority: it replays every record's
digest and link, checks signatures where a trust anchor is configured, and
reports the first mismatch instead of raising. Truncation from the tail is not
detectable by the chain alone; that boundary needs an external head
attestation (see the federation module).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .canonical import loads_strict
from .chain import (
    GENESIS,
    UnsupportedAlgorithm,
    compute_curr_hash,
    verify_signature,
)
from .events import EventRecord, WireFormatError, payload_of, record_from_wire
from .store import IoFailure, _split_lines, is_redacted

MISMATCH_HASH = "hash"
MISMATCH_LINK = "link"
MISMATCH_SIGNATURE = "signature"
MISMATCH_PARSE = "parse"
MISMATCH_GENESIS = "genesis"


@dataclass
class VerificationReport:
    """Outcome of a replay: validity, events checked, first mismatch.

    ``key_warnings`` lists signer key_ids seen without a configured trust
    anchor (cross-org logs legitimately contain them); ``unverifiable_content``
    lists indices of redacted records whose chain position held but whose
    payload could not be re-hashed.
    """

    valid: bool
    events_checked: int
    first_mismatch: int | None = None
    mismatch_kind: str | None = None
    key_warnings: list[str] = field(default_factory=list)
    unverifiable_content: list[int] = field(default_factory=list)

    def to_wire(self) -> dict[str, Any]:
        return {
            "valid": self.valid,
            "events_checked": self.events_checked,
            "first_mismatch": self.first_mismatch,
            "mismatch_kind": self.mismatch_kind,
            "key_warnings": list(self.key_warnings),
            "unverifiable_content": list(self.unverifiable_content),
        }


def _replay(
    entries: Sequence[EventRecord | WireFormatError],
    anchor_prev_hash: str,
    trust: dict[str, bytes] | None,
    allow_redacted: bool,
) -> VerificationReport:
    trust = trust or {}
    key_warnings: list[str] = []
    unverifiable: list[int] = []
    expected_prev = anchor_prev_hash

    def mismatch(index: int, kind: str) -> VerificationReport:
        return VerificationReport(
            valid=False,
            events_checked=index,
            first_mismatch=index,
            mismatch_kind=kind,
            key_warnings=key_warnings,
            unverifiable_content=unverifiable,
        )

    for index, entry in enumerate(entries):
        if isinstance(entry, WireFormatError):
            return mismatch(index, MISMATCH_PARSE)
        record = entry
        if record.prev_hash != expected_prev:
            if index == 0 and expected_prev == GENESIS:
                return mismatch(index, MISMATCH_GENESIS)
            return mismatch(index, MISMATCH_LINK)
        if allow_redacted and is_redacted(record):
            unverifiable.append(index)
        else:
            if record.curr_hash != compute_curr_hash(payload_of(record), record.prev_hash):
                return mismatch(index, MISMATCH_HASH)
        if record.sig is not None:
            public_key = trust.get(record.sig.key_id)
            if public_key is None:
                if record.sig.key_id not in key_warnings:
                    key_warnings.append(record.sig.key_id)
            else:
                try:
                    ok = verify_signature(record.sig, record.curr_hash, public_key)
                except UnsupportedAlgorithm:
                    ok = False
                if not ok:
                    return mismatch(index, MISMATCH_SIGNATURE)
        expected_prev = record.curr_hash

    return VerificationReport(
        valid=True,
        events_checked=len(entries),
        key_warnings=key_warnings,
        unverifiable_content=unverifiable,
    )


def verify_log(path: Path | str, trust: dict[str, bytes] | None = None) -> VerificationReport:
    """Replay an entire ledger file from GENESIS.

    Content problems (bad JSON, broken links, bad digests or signatures) are
    report data, never exceptions; only the file read itself can fail.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    lines, _ = _split_lines(data)
    entries: list[EventRecord | WireFormatError] = []
    for raw in lines:
        try:
            entries.append(record_from_wire(loads_strict(raw)))
        except WireFormatError as exc:
            entries.append(exc)
        except ValueError as exc:
            entries.append(WireFormatError(str(exc)))
    return _replay(entries, GENESIS, trust, allow_redacted=False)


def verify_segment(
    records: Sequence[EventRecord],
    anchor_prev_hash: str,
    trust: dict[str, bytes] | None = None,
    allow_redacted: bool = False,
) -> VerificationReport:
    """Replay a contiguous slice seeded from its anchor instead of GENESIS.

    ``allow_redacted`` is only meaningful for evidence packages, where a
    record's details may have been replaced by the redaction marker while its
    stored digest keeps the chain linked.
    """
    return _replay(list(records), anchor_prev_hash, trust, allow_redacted)
