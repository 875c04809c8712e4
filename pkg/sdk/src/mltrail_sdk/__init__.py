"""Capture-side emitter SDK for mltrail audit ledgers.

Talks to the core only through its external interfaces: the HTTP ingest
service, the draft spool file format (consumed by `mltrail ingest`), and the
shipped event schema.
"""

from .client import DeliveryFailed, EmitAck, EmitRejected, EmitterClient
from .datasets import register_dataset
from .middleware import ServingMiddleware, serving_middleware
from .taxonomy import EVENT_TYPES
from .training import TrainingCallback, training_callback

__version__ = "0.1.0"

__all__ = [
    "DeliveryFailed",
    "EVENT_TYPES",
    "EmitAck",
    "EmitRejected",
    "EmitterClient",
    "ServingMiddleware",
    "TrainingCallback",
    "register_dataset",
    "serving_middleware",
    "training_callback",
]
