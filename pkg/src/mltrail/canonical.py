"""Canonical JSON encoding used for hashing and signing.

The integrity scheme needs a bitwise-deterministic byte form: map keys sorted
by code point, no insignificant whitespace, UTF-8, minimal string escaping,
and shortest round-trip float rendering. Two trees that differ only in map
insertion order always encode to identical bytes.
"""

from __future__ import annotations

import json
import math
from typing import Any


class NonCanonicalizable(ValueError):
    """Value cannot be canonically encoded (NaN/Inf, non-string map key, foreign type)."""


def _check_tree(value: Any, path: str) -> None:
    if value is None or isinstance(value, (str, bool)):
        return
    if isinstance(value, int):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise NonCanonicalizable(f"non-finite number at {path}")
        return
    if isinstance(value, list):
        for i, item in enumerate(value):
            _check_tree(item, f"{path}[{i}]")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise NonCanonicalizable(f"non-string map key {key!r} at {path}")
            _check_tree(item, f"{path}.{key}")
        return
    raise NonCanonicalizable(f"unsupported type {type(value).__name__} at {path}")


def canonical_dumps(value: Any) -> str:
    """Canonical JSON text of ``value``; raises NonCanonicalizable on bad input."""
    _check_tree(value, "$")
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    )


def canonical_serialize(value: Any) -> bytes:
    """Canonical UTF-8 JSON bytes of ``value``."""
    return canonical_dumps(value).encode("utf-8")


def _reject_constant(name: str) -> Any:
    raise ValueError(f"non-finite JSON constant {name} not allowed")


def loads_strict(data: bytes | str) -> Any:
    """json.loads that rejects the NaN/Infinity extensions.

    The standard parser accepts them, which would let a tampered line smuggle a
    value the canonical encoder refuses; a ledger line must always round-trip.
    """
    return json.loads(data, parse_constant=_reject_constant)
