"""Training-loop adapter: hook methods that emit lifecycle events.

Framework-agnostic by design; wire the hooks into whatever trainer you use.
Delivery failures are logged and swallowed (the draft is already in the retry
spool) so instrumentation can never break a training run.
"""

from __future__ import annotations

import logging
from typing import Any, Mapping

from .client import DeliveryFailed, EmitRejected, EmitterClient

logger = logging.getLogger(__name__)


class TrainingCallback:
    """Emits FineTuneStart / EpochEnd / Evaluation / CheckpointSaved /
    FineTuneEnd, all keyed by one model_id, carrying the run configuration
    (learning rate, batch size, epochs, seed, output directory, ...) and the
    latest metrics."""

    def __init__(self, client: EmitterClient, model_id: str):
        self.client = client
        self.model_id = model_id
        self._run_config: dict[str, Any] = {}
        self._latest_metrics: dict[str, Any] = {}

    def on_train_begin(self, run_config: Mapping[str, Any] | None = None) -> None:
        self._run_config = dict(run_config or {})
        self._emit("FineTuneStart", {"run_config": self._run_config})

    def on_epoch_end(self, epoch: int, metrics: Mapping[str, Any] | None = None) -> None:
        self._latest_metrics = dict(metrics or {})
        self._emit("EpochEnd", {"epoch": epoch, "metrics": self._latest_metrics})

    def on_evaluate(self, metrics: Mapping[str, Any] | None = None) -> None:
        self._latest_metrics = dict(metrics or {})
        self._emit("Evaluation", {"metrics": self._latest_metrics})

    def on_save(self, checkpoint_path: str, step: int | None = None) -> None:
        details: dict[str, Any] = {"checkpoint_path": checkpoint_path}
        if step is not None:
            details["step"] = step
        self._emit("CheckpointSaved", details)

    def on_train_end(self, metrics: Mapping[str, Any] | None = None) -> None:
        if metrics is not None:
            self._latest_metrics = dict(metrics)
        self._emit(
            "FineTuneEnd",
            {"run_config": self._run_config, "metrics": self._latest_metrics},
        )

    def _emit(self, event_type: str, details: dict[str, Any]) -> None:
        try:
            self.client.emit(event_type, details, model_id=self.model_id)
        except DeliveryFailed as exc:
            logger.warning("audit event %s not delivered (%s); spooled", event_type, exc)
        except EmitRejected as exc:
            logger.error("audit event %s rejected by the core: %s", event_type, exc)


def training_callback(client: EmitterClient, model_id: str) -> TrainingCallback:
    return TrainingCallback(client, model_id)
