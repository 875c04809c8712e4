"""Shared fixtures: draft factories, the bank-chatbot scenario, and an
independent command-line SHA-256 oracle."""

from __future__ import annotations

import subprocess
import uuid
from pathlib import Path

import pytest

from mltrail.store import EventDraft, Ledger, open_ledger

REPO_ROOT = Path(__file__).resolve().parent.parent
SCHEMA_PATH = REPO_ROOT / "schemas" / "event_record.schema.json"
PROFILE_PATH = REPO_ROOT / "profiles" / "high_risk.yaml"
FIXTURE_RECORD_PATH = REPO_ROOT / "fixtures" / "dataset_registered.json"


def shell_sha256(data: bytes) -> str:
    """SHA-256 via the system digest tool, independent of hashlib."""
    out = subprocess.run(["sha256sum"], input=data, capture_output=True, check=True)
    return out.stdout.decode().split()[0]


def stable_uuid(tag: str) -> str:
    return str(uuid.uuid5(uuid.NAMESPACE_URL, f"mltrail-test:{tag}"))


def make_draft(
    event_type: str = "ServingConfigChanged",
    system: str = "test",
    actor: str = "tester",
    details=None,
    tag: str | None = None,
    timestamp: str | None = None,
    **scope,
) -> EventDraft:
    return EventDraft(
        event_type=event_type,
        system=system,
        actor=actor,
        details=details,
        model_id=scope.get("model_id"),
        dataset_id=scope.get("dataset_id"),
        deployment_id=scope.get("deployment_id") or ("dep-test" if not scope else None),
        timestamp=timestamp,
        event_id=stable_uuid(tag) if tag else None,
    )


def populate(ledger: Ledger, drafts) -> list:
    return [ledger.append(draft) for draft in drafts]


@pytest.fixture
def ledger(tmp_path) -> Ledger:
    return open_ledger(tmp_path / "trail.jsonl", create=True)


def approval_details(scope: dict[str, str], owner: str = "Risk Lead") -> dict:
    return {
        "owner": owner,
        "rationale_or_statement": "evaluation review passed",
        "scope": dict(scope),
    }


def bank_drafts() -> list[EventDraft]:
    """The retail-bank chatbot scenario: selection, fine-tune, evaluation,
    approval, deployment, two config changes, rollout change, incident."""
    model = "bankgpt-ft-v2"
    dataset = "mortgage-transcripts-v1"
    deployment = "bankgpt-prod"

    def ts(day: int, hour: int = 9) -> str:
        return f"2025-03-{day:02d}T{hour:02d}:00:00Z"

    return [
        EventDraft(
            event_type="ArtifactRegistered", system="ml_platform", actor="ML Eng",
            model_id=model, timestamp=ts(1),
            details={"base_model": "provider/foundation-17b", "license": "commercial"},
            event_id=stable_uuid("bank-1"),
        ),
        EventDraft(
            event_type="DatasetRegistered", system="data_engineering", actor="Data Eng",
            dataset_id=dataset, timestamp=ts(2),
            details={"source": "s3://bank/mortgage-transcripts", "version": "v1", "rows": 52000},
            event_id=stable_uuid("bank-2"),
        ),
        EventDraft(
            event_type="FineTuneStart", system="training", actor="trainer-job",
            model_id=model, dataset_id=dataset, timestamp=ts(3),
            details={"learning_rate": 0.0002, "batch_size": 16, "epochs": 3, "seed": 7},
            event_id=stable_uuid("bank-3"),
        ),
        EventDraft(
            event_type="FineTuneEnd", system="training", actor="trainer-job",
            model_id=model, timestamp=ts(4),
            details={"final_loss": 0.81, "checkpoint": "ckpt-0003"},
            event_id=stable_uuid("bank-4"),
        ),
        EventDraft(
            event_type="Evaluation", system="eval_harness", actor="eval-job",
            model_id=model, timestamp=ts(5),
            details={"suite": "mortgage-qa-v2", "accuracy": 0.91},
            event_id=stable_uuid("bank-5"),
        ),
        EventDraft(
            event_type="Approval", system="governance", actor="Risk Lead",
            model_id=model, deployment_id=deployment, timestamp=ts(6),
            details={
                "owner": "Risk Lead",
                "rationale_or_statement": "eval report R-12 passed; limited rollout approved",
                "scope": {"model_id": model, "deployment_id": deployment},
                "references": ["R-12"],
            },
            event_id=stable_uuid("bank-6"),
        ),
        EventDraft(
            event_type="DeploymentCompleted", system="cicd", actor="deploy-bot",
            model_id=model, deployment_id=deployment, timestamp=ts(7),
            details={"environment": "prod", "pipeline": "release-214"},
            event_id=stable_uuid("bank-7"),
        ),
        EventDraft(
            event_type="ServingConfigChanged", system="serving", actor="platform-eng",
            deployment_id=deployment, timestamp=ts(8),
            details={
                "prompt_template": "mortgage-faq-v1", "temperature": 0.7,
                "max_tokens": 512, "retrieval": "catalog-v3",
            },
            event_id=stable_uuid("bank-8"),
        ),
        EventDraft(
            event_type="ServingConfigChanged", system="serving", actor="platform-eng",
            deployment_id=deployment, timestamp=ts(9),
            details={
                "prompt_template": "mortgage-faq-v1", "temperature": 0.2,
                "max_tokens": 512, "retrieval": "catalog-v3",
            },
            event_id=stable_uuid("bank-9"),
        ),
        EventDraft(
            event_type="RolloutChanged", system="cicd", actor="deploy-bot",
            deployment_id=deployment, timestamp=ts(10),
            details={"feature_flag": "bankgpt-web", "percent": 25},
            event_id=stable_uuid("bank-10"),
        ),
        EventDraft(
            event_type="IncidentOpened", system="support", actor="loan-officer-42",
            deployment_id=deployment, timestamp=ts(20),
            details={"ticket": "INC-881", "summary": "unsuitable product guidance reported"},
            event_id=stable_uuid("bank-11"),
        ),
        EventDraft(
            event_type="IncidentResolved", system="support", actor="risk-team",
            deployment_id=deployment, timestamp=ts(28),
            details={"ticket": "INC-881", "resolution": "prompt template rolled back"},
            event_id=stable_uuid("bank-12"),
        ),
    ]


@pytest.fixture
def bank_ledger(tmp_path) -> Ledger:
    led = open_ledger(tmp_path / "bank.jsonl", create=True)
    populate(led, bank_drafts())
    return led
