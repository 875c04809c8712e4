#!/usr/bin/env python3
"""Tamper-detection experiment: build an N-event ledger, apply M independent
random single-byte mutations (one per trial), and report detection stats.

Usage: python3 scripts/fuzz_tamper.py [--events 100] [--trials 1000] [--seed 1337]
"""

from __future__ import annotations

import argparse
import random
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from mltrail.store import EventDraft, open_ledger  # noqa: E402
from mltrail.verify import verify_log  # noqa: E402


@dataclass
class FuzzConfig:
    events: int = 100
    trials: int = 1000
    seed: int = 1337


def build_ledger(path: Path, events: int) -> None:
    ledger = open_ledger(path, create=True)
    for i in range(events):
        ledger.append(
            EventDraft(
                event_type="Evaluation",
                system="pipeline",
                actor=f"job-{i % 5}",
                model_id=f"m{i % 3}",
                details={"step": i, "note": f"entry {i}", "ok": i % 2 == 0},
                timestamp=f"2025-06-{(i % 28) + 1:02d}T{i % 24:02d}:00:00Z",
            )
        )


def run(config: FuzzConfig) -> int:
    rng = random.Random(config.seed)
    with tempfile.TemporaryDirectory() as tmp:
        log = Path(tmp) / "trail.jsonl"
        build_ledger(log, config.events)
        data = log.read_bytes()

        spans = []
        start = 0
        for line in data.splitlines(keepends=True):
            spans.append((start, start + len(line)))
            start += len(line)

        target = Path(tmp) / "mutated.jsonl"
        detected = 0
        localized = 0
        kinds: dict[str, int] = {}
        started = time.monotonic()
        for _ in range(config.trials):
            position = rng.randrange(len(data))
            replacement = rng.randrange(256)
            if replacement == data[position]:
                replacement = (replacement + 1) % 256
            mutated = bytearray(data)
            mutated[position] = replacement
            target.write_bytes(bytes(mutated))
            report = verify_log(target)
            if not report.valid:
                detected += 1
                kinds[report.mismatch_kind] = kinds.get(report.mismatch_kind, 0) + 1
                index = next(i for i, (lo, hi) in enumerate(spans) if lo <= position < hi)
                if report.first_mismatch <= index:
                    localized += 1
        elapsed = time.monotonic() - started

    print(f"events={config.events} trials={config.trials} seed={config.seed}")
    print(f"detected: {detected}/{config.trials} ({100.0 * detected / config.trials:.1f}%)")
    print(f"localized at-or-before mutated record: {localized}/{detected}")
    print(f"mismatch kinds: {dict(sorted(kinds.items()))}")
    print(f"elapsed: {elapsed:.2f}s ({1000.0 * elapsed / config.trials:.2f} ms/trial)")
    return 0 if detected == config.trials else 1


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--events", type=int, default=100)
    parser.add_argument("--trials", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=1337)
    args = parser.parse_args()
    return run(FuzzConfig(events=args.events, trials=args.trials, seed=args.seed))


if __name__ == "__main__":
    raise SystemExit(main())
