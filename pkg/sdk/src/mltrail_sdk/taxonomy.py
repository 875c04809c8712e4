"""Event-type taxonomy accepted by the audit core.

This is the SDK's own copy so drafts can be rejected locally before delivery;
the contract test pins it against the core's shipped schema document.
"""

EVENT_TYPES = frozenset(
    {
        # development
        "DatasetRegistered",
        "FineTuneStart",
        "EpochEnd",
        "Evaluation",
        "CheckpointSaved",
        "FineTuneEnd",
        "ArtifactRegistered",
        # deployment
        "DeploymentStarted",
        "DeploymentCompleted",
        "RolloutChanged",
        "ServingConfigChanged",
        "ModelDeployed",
        # operations
        "InferenceRequestMetadata",
        "InferenceResponseMetadata",
        "GuardrailTriggered",
        "DriftDetected",
        "IncidentOpened",
        "IncidentResolved",
        # governance
        "Approval",
        "RiskWaiver",
        "Attestation",
        # trail plumbing
        "ExportCreated",
        "PointerPublished",
    }
)
