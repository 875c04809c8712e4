"""Dataset registration helper: anchors later training and evaluation events
to a specific data version."""

from __future__ import annotations

from typing import Any

from .client import EmitAck, EmitterClient


def register_dataset(
    client: EmitterClient,
    dataset_id: str,
    source: str,
    version: str,
    rows: int | None = None,
    preprocessing_summary: str | None = None,
    content_hash: str | None = None,
    datasheet_ref: str | None = None,
    license: str | None = None,
) -> EmitAck:
    details: dict[str, Any] = {"source": source, "version": version}
    if rows is not None:
        details["rows"] = rows
    if preprocessing_summary is not None:
        details["preprocessing_summary"] = preprocessing_summary
    if content_hash is not None:
        details["content_hash"] = content_hash
    if datasheet_ref is not None:
        details["datasheet_ref"] = datasheet_ref
    if license is not None:
        details["license"] = license
    return client.emit("DatasetRegistered", details, dataset_id=dataset_id)
