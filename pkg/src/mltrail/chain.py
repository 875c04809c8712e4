"""Hash chaining and per-writer detached signatures.

Every ledger record carries a SHA-256 digest over its canonical payload bytes
concatenated with the ASCII bytes of the previous record's digest; the first
record chains from the fixed sentinel ``GENESIS``. Writers may additionally
sign the ASCII hex of each record's digest with an ed25519 key, so a signature
transitively commits to the whole chain prefix.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    NoEncryption,
    PrivateFormat,
    PublicFormat,
)

from .canonical import canonical_serialize

GENESIS = "GENESIS"
SIG_ALGORITHM = "ed25519"

_HASH_RE = re.compile(r"^[0-9a-f]{64}$")


class MissingPrivateKey(Exception):
    """Signing was requested with a public-only key."""


class UnsupportedAlgorithm(Exception):
    """Signature names an algorithm this build cannot verify."""


def is_hash(value: Any) -> bool:
    """True for a 64-char lowercase hex digest."""
    return isinstance(value, str) and bool(_HASH_RE.match(value))


def is_prev_hash(value: Any) -> bool:
    """True for a valid prev_hash: a digest or the GENESIS sentinel."""
    return value == GENESIS or is_hash(value)


@dataclass(frozen=True)
class ChainHead:
    """Per-ledger integrity cursor: digest of the last record and record count."""

    last_hash: str = GENESIS
    count: int = 0


@dataclass(frozen=True)
class Signature:
    key_id: str
    algorithm: str
    value: str  # base64-encoded detached signature bytes

    def to_wire(self) -> dict[str, str]:
        return {"key_id": self.key_id, "algorithm": self.algorithm, "value": self.value}

    @classmethod
    def from_wire(cls, obj: Any) -> "Signature":
        if not isinstance(obj, dict):
            raise ValueError("sig must be a JSON object")
        unknown = set(obj) - {"key_id", "algorithm", "value"}
        if unknown:
            raise ValueError(f"sig has unknown field(s): {sorted(unknown)}")
        for field in ("key_id", "algorithm", "value"):
            if not isinstance(obj.get(field), str):
                raise ValueError(f"sig.{field} must be a string")
        return cls(key_id=obj["key_id"], algorithm=obj["algorithm"], value=obj["value"])


@dataclass(frozen=True)
class WriterKey:
    """An ed25519 keypair; key_id is the SHA-256 hex of the public key bytes."""

    key_id: str
    public_key: bytes
    private_key: bytes | None = None


def compute_curr_hash(payload: Any, prev_hash: str) -> str:
    """SHA-256 hex over canonical payload bytes followed by the ASCII prev hash.

    No separator is inserted between the two parts; this framing is normative
    for the chain and must match any external re-verification.
    """
    if not is_prev_hash(prev_hash):
        raise ValueError(f"prev_hash must be 64 lowercase hex chars or {GENESIS!r}")
    digest = hashlib.sha256()
    digest.update(canonical_serialize(payload))
    digest.update(prev_hash.encode("ascii"))
    return digest.hexdigest()


def key_id_of(public_key: bytes) -> str:
    return hashlib.sha256(public_key).hexdigest()


def generate_keypair(seed: bytes | None = None) -> WriterKey:
    """New signing keypair; deterministic when a seed is supplied."""
    if seed is None:
        private = Ed25519PrivateKey.generate()
    else:
        private = Ed25519PrivateKey.from_private_bytes(hashlib.sha256(seed).digest())
    public_bytes = private.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    private_bytes = private.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())
    return WriterKey(key_id=key_id_of(public_bytes), public_key=public_bytes, private_key=private_bytes)


def sign_bytes(key: WriterKey, message: bytes) -> Signature:
    if key.private_key is None:
        raise MissingPrivateKey(f"key {key.key_id} has no private part")
    private = Ed25519PrivateKey.from_private_bytes(key.private_key)
    raw = private.sign(message)
    return Signature(key_id=key.key_id, algorithm=SIG_ALGORITHM, value=base64.b64encode(raw).decode("ascii"))


def verify_bytes(sig: Signature, message: bytes, public_key: bytes) -> bool:
    if sig.algorithm != SIG_ALGORITHM:
        raise UnsupportedAlgorithm(sig.algorithm)
    try:
        raw = base64.b64decode(sig.value.encode("ascii"), validate=True)
    except (binascii.Error, ValueError, UnicodeEncodeError):
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(raw, message)
    except (InvalidSignature, ValueError):
        return False
    return True


def sign_hash(key: WriterKey, curr_hash: str) -> Signature:
    """Detached signature over the ASCII hex of a record digest."""
    return sign_bytes(key, curr_hash.encode("ascii"))


def verify_signature(sig: Signature, curr_hash: str, public_key: bytes) -> bool:
    return verify_bytes(sig, curr_hash.encode("ascii"), public_key)


# Key files are a small JSON envelope: {key_id, algorithm, public, private?},
# with the key material base64-encoded. Trust anchors are a directory of these.


def save_key(key: WriterKey, path: Path | str, include_private: bool = True) -> None:
    envelope: dict[str, str] = {
        "key_id": key.key_id,
        "algorithm": SIG_ALGORITHM,
        "public": base64.b64encode(key.public_key).decode("ascii"),
    }
    if include_private:
        if key.private_key is None:
            raise MissingPrivateKey(f"key {key.key_id} has no private part")
        envelope["private"] = base64.b64encode(key.private_key).decode("ascii")
    Path(path).write_text(json.dumps(envelope, indent=2) + "\n", encoding="utf-8")


def load_key(path: Path | str) -> WriterKey:
    try:
        envelope = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read key file {path}: {exc}") from exc
    if not isinstance(envelope, dict) or not isinstance(envelope.get("public"), str):
        raise ValueError(f"key file {path} is not a key envelope")
    if envelope.get("algorithm") not in (None, SIG_ALGORITHM):
        raise UnsupportedAlgorithm(str(envelope.get("algorithm")))
    public = base64.b64decode(envelope["public"])
    private = base64.b64decode(envelope["private"]) if envelope.get("private") else None
    key_id = key_id_of(public)
    if envelope.get("key_id") not in (None, key_id):
        raise ValueError(f"key file {path}: key_id does not match the public key")
    return WriterKey(key_id=key_id, public_key=public, private_key=private)


def load_trust_dir(path: Path | str) -> dict[str, bytes]:
    """Map key_id -> public key bytes for every key envelope in a directory."""
    anchors: dict[str, bytes] = {}
    for entry in sorted(Path(path).glob("*.json")):
        key = load_key(entry)
        anchors[key.key_id] = key.public_key
    return anchors
