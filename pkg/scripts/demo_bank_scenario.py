#!/usr/bin/env python3
"""Build the retail-bank chatbot demo ledger and walk the auditor workflow:
timeline reconstruction, release diff, ordering check, and a profile check.

Usage: python3 scripts/demo_bank_scenario.py [--out DIR]
"""

from __future__ import annotations

import argparse
import shutil
import sys
from dataclasses import dataclass
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))
sys.path.insert(0, str(REPO_ROOT))

from mltrail.federation import export_evidence  # noqa: E402
from mltrail.chain import generate_keypair  # noqa: E402
from mltrail.profiles import evaluate, load_profile  # noqa: E402
from mltrail.query import EventFilter, diff_releases, order_check, timeline  # noqa: E402
from mltrail.store import open_ledger  # noqa: E402
from mltrail.verify import verify_log, verify_segment  # noqa: E402
from tests.conftest import bank_drafts, stable_uuid  # noqa: E402


@dataclass
class DemoConfig:
    out_dir: Path
    deployment_id: str = "bankgpt-prod"
    model_id: str = "bankgpt-ft-v2"


def run(config: DemoConfig) -> int:
    if config.out_dir.exists():
        shutil.rmtree(config.out_dir)
    config.out_dir.mkdir(parents=True)
    log = config.out_dir / "bank.jsonl"

    ledger = open_ledger(log, create=True)
    for draft in bank_drafts():
        ledger.append(draft)
    print(f"ledger: {log} ({ledger.head.count} events, log_id {ledger.log_id})")

    report = verify_log(log)
    print(f"\n== verify ==\nvalid={report.valid} events_checked={report.events_checked}")

    records = ledger.read_all().records
    print(f"\n== timeline for {config.deployment_id} ==")
    for row in timeline(records, "deployment_id", config.deployment_id):
        print(f"{row.timestamp}  {row.event_type:<24} {row.summary}")

    approved_first = order_check(
        records,
        earlier=EventFilter(event_types={"Approval"}, model_id=config.model_id),
        later=EventFilter(event_types={"DeploymentCompleted"}, model_id=config.model_id),
    )
    print(f"\n== ordering ==\nApproval precedes DeploymentCompleted: {approved_first}")

    diff = diff_releases(records, stable_uuid("bank-8"), stable_uuid("bank-9"))
    print("\n== serving config diff ==")
    for change in diff.changed:
        print(f"changed {change.path}: {change.before} -> {change.after}")

    profile = load_profile(REPO_ROOT / "profiles" / "high_risk.yaml")
    violations = evaluate(profile, records)
    print(f"\n== profile {profile.name} ==\nviolations: {len(violations)}")
    for violation in violations:
        print(f"  [{violation.rule_name}] {violation.description}")

    key = generate_keypair(seed=b"demo-bank")
    package = export_evidence(
        ledger, EventFilter(deployment_id=config.deployment_id), key, actor="demo"
    )
    segment = verify_segment(package.records, package.anchor_prev_hash)
    print(
        f"\n== evidence export ==\nrecords={len(package.records)} "
        f"anchor={package.anchor_prev_hash[:12]} segment_valid={segment.valid}"
    )

    # tamper with a copy to show detection
    tampered = config.out_dir / "tampered.jsonl"
    tampered.write_text(log.read_text().replace('"temperature":0.2', '"temperature":0.9'))
    broken = verify_log(tampered)
    print(
        f"\n== tamper demo ==\nvalid={broken.valid} "
        f"first_mismatch={broken.first_mismatch} kind={broken.mismatch_kind}"
    )
    return 0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("demo_out"))
    args = parser.parse_args()
    return run(DemoConfig(out_dir=args.out))


if __name__ == "__main__":
    raise SystemExit(main())
