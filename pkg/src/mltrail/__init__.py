"""Tamper-evident audit trails for model lifecycles.

Events in a shared core schema are appended to a hash-chained JSONL ledger,
optionally signed per writer; auditor workflows (verification, scoped
timelines, release diffs, compliance profiles, signed pointers, and bounded
evidence exports) all read from the same record.
"""

from .canonical import NonCanonicalizable, canonical_serialize
from .chain import (
    GENESIS,
    ChainHead,
    Signature,
    WriterKey,
    compute_curr_hash,
    generate_keypair,
    load_key,
    save_key,
    sign_hash,
    verify_signature,
)
from .events import (
    EventRecord,
    EventType,
    SchemaViolation,
    payload_of,
    validate_event,
)
from .federation import (
    EvidencePackage,
    SignedPointer,
    export_evidence,
    publish_pointer,
    verify_pointer,
)
from .governance import record_decision, suggest_identifiers
from .profiles import Profile, Violation, evaluate, load_profile
from .query import (
    EventFilter,
    ReleaseDiff,
    diff_releases,
    filter_events,
    order_check,
    timeline,
)
from .store import EventDraft, Ledger, open_ledger, read_ledger
from .verify import VerificationReport, verify_log, verify_segment

__version__ = "0.1.0"

__all__ = [
    "GENESIS",
    "ChainHead",
    "EventDraft",
    "EventFilter",
    "EventRecord",
    "EventType",
    "EvidencePackage",
    "Ledger",
    "NonCanonicalizable",
    "Profile",
    "ReleaseDiff",
    "SchemaViolation",
    "Signature",
    "SignedPointer",
    "VerificationReport",
    "Violation",
    "WriterKey",
    "canonical_serialize",
    "compute_curr_hash",
    "diff_releases",
    "evaluate",
    "export_evidence",
    "filter_events",
    "generate_keypair",
    "load_key",
    "load_profile",
    "open_ledger",
    "order_check",
    "payload_of",
    "publish_pointer",
    "read_ledger",
    "record_decision",
    "save_key",
    "sign_hash",
    "suggest_identifiers",
    "timeline",
    "validate_event",
    "verify_log",
    "verify_pointer",
    "verify_segment",
    "verify_signature",
]
