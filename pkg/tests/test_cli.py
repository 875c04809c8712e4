import json

import pytest
from click.testing import CliRunner

import mltrail.store
from mltrail.cli import main
from mltrail.verify import verify_log

from .conftest import PROFILE_PATH


@pytest.fixture
def runner():
    return CliRunner()


def run(runner, *args, **kwargs):
    result = runner.invoke(main, list(args), catch_exceptions=False, **kwargs)
    return result


def seed_ledger(runner, log, events=3):
    run(runner, "init", "--log", str(log))
    for i in range(events):
        result = run(
            runner, "append", "--log", str(log),
            "--type", "Evaluation", "--system", "eval", "--actor", "bot",
            "--model-id", "m1", "--details", json.dumps({"i": i}),
            "--timestamp", f"2025-04-{i + 1:02d}T00:00:00Z",
        )
        assert result.exit_code == 0, result.output


class TestBasics:
    def test_init_append_verify(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        seed_ledger(runner, log)
        result = run(runner, "verify", "--log", str(log), "--json")
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report["valid"] is True and report["events_checked"] == 3

    def test_verify_exits_nonzero_on_tamper(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        seed_ledger(runner, log)
        log.write_text(log.read_text().replace('"i":1', '"i":7'))
        result = run(runner, "verify", "--log", str(log))
        assert result.exit_code == 1
        assert "first_mismatch" in result.output

    def test_append_validation_error_message(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        run(runner, "init", "--log", str(log))
        result = run(
            runner, "append", "--log", str(log),
            "--type", "Evaluation", "--details", "{}",
        )
        assert result.exit_code != 0
        assert "scope" in result.output

    def test_details_from_file(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        run(runner, "init", "--log", str(log))
        details = tmp_path / "d.json"
        details.write_text('{"rows": 5}')
        result = run(
            runner, "append", "--log", str(log), "--type", "DatasetRegistered",
            "--dataset-id", "ds1", "--details", f"@{details}", "--json",
        )
        assert result.exit_code == 0
        assert json.loads(result.output)["details"] == {"rows": 5}


class TestSigningFlow:
    def test_keygen_sign_verify_with_trust(self, runner, tmp_path):
        key_path = tmp_path / "writer.json"
        result = run(runner, "keygen", "--out", str(key_path))
        assert result.exit_code == 0
        keyring = tmp_path / "ring"
        keyring.mkdir()
        (keyring / "writer.pub.json").write_text(
            (tmp_path / "writer.json.pub.json").read_text()
        )
        log = tmp_path / "s.jsonl"
        run(runner, "init", "--log", str(log))
        result = run(
            runner, "append", "--log", str(log), "--type", "Evaluation",
            "--model-id", "m1", "--details", "{}", "--sign-key", str(key_path),
        )
        assert result.exit_code == 0
        checked = run(runner, "verify", "--log", str(log), "--trust", str(keyring), "--json")
        report = json.loads(checked.output)
        assert report["valid"] is True and report["key_warnings"] == []


class TestQueryTimelineDiff:
    def test_query_json(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        seed_ledger(runner, log)
        result = run(runner, "query", "--log", str(log), "--model-id", "m1", "--json")
        assert result.exit_code == 0
        assert len(json.loads(result.output)) == 3

    def test_query_time_bounds(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        seed_ledger(runner, log)
        result = run(
            runner, "query", "--log", str(log), "--json",
            "--from", "2025-04-02T00:00:00Z", "--to", "2025-04-03T00:00:00Z",
        )
        assert [r["timestamp"] for r in json.loads(result.output)] == ["2025-04-02T00:00:00Z"]

    def test_timeline_table(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        seed_ledger(runner, log)
        result = run(runner, "timeline", "--log", str(log), "--scope", "model_id=m1")
        assert result.exit_code == 0
        assert result.output.count("Evaluation") == 3

    def test_timeline_bad_scope(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        seed_ledger(runner, log)
        assert run(runner, "timeline", "--log", str(log), "--scope", "actor=x").exit_code != 0

    def test_diff(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        seed_ledger(runner, log)
        records = json.loads(run(runner, "query", "--log", str(log), "--json").output)
        result = run(
            runner, "diff", "--log", str(log),
            records[0]["event_id"], records[2]["event_id"], "--json",
        )
        diff = json.loads(result.output)
        assert diff["changed"] == [{"path": "/i", "before": 0, "after": 2}]


class TestCheck:
    def test_check_flags_missing_approval_then_passes(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        run(runner, "init", "--log", str(log))
        run(
            runner, "append", "--log", str(log), "--type", "DeploymentCompleted",
            "--model-id", "m1", "--deployment-id", "d1", "--details", "{}",
        )
        result = run(runner, "check", "--log", str(log), "--profile", str(PROFILE_PATH), "--json")
        assert result.exit_code == 1
        violations = json.loads(result.output)
        assert len(violations) == 1
        assert violations[0]["rule_name"] == "approval-before-deployment"

        fixed = tmp_path / "fixed.jsonl"
        run(runner, "init", "--log", str(fixed))
        run(
            runner, "approve", "--log", str(fixed), "--owner", "Risk Lead",
            "--rationale", "approved", "--model-id", "m1", "--no-interactive",
        )
        run(
            runner, "append", "--log", str(fixed), "--type", "DeploymentCompleted",
            "--model-id", "m1", "--deployment-id", "d1", "--details", "{}",
        )
        result = run(runner, "check", "--log", str(fixed), "--profile", str(PROFILE_PATH))
        assert result.exit_code == 0, result.output


class TestGovernanceCommands:
    def test_non_interactive_missing_owner_fails_hard(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        run(runner, "init", "--log", str(log))
        result = run(
            runner, "waive", "--log", str(log), "--rationale", "r",
            "--model-id", "m1", "--no-interactive",
        )
        assert result.exit_code != 0
        assert "owner" in result.output

    def test_interactive_prompts_fill_fields(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        run(runner, "init", "--log", str(log))
        result = runner.invoke(
            main,
            ["attest", "--log", str(log), "--dataset-id", "ds1", "--interactive"],
            input="Compliance Officer\nlicense terms reviewed\n",
            catch_exceptions=False,
        )
        assert result.exit_code == 0, result.output
        records = json.loads(run(runner, "query", "--log", str(log), "--json").output)
        assert records[0]["details"]["owner"] == "Compliance Officer"

    def test_interactive_and_flag_paths_produce_identical_payloads(
        self, runner, tmp_path, monkeypatch
    ):
        fixed_id = "99999999-8888-7777-6666-555555555555"
        monkeypatch.setattr(mltrail.store, "new_event_id", lambda: fixed_id)

        log_a = tmp_path / "a.jsonl"
        run(runner, "init", "--log", str(log_a))
        result = run(
            runner, "approve", "--log", str(log_a), "--owner", "Risk Lead",
            "--rationale", "looks good", "--model-id", "m1",
            "--timestamp", "2025-05-01T00:00:00Z", "--no-interactive",
        )
        assert result.exit_code == 0, result.output

        log_b = tmp_path / "b.jsonl"
        run(runner, "init", "--log", str(log_b))
        result = runner.invoke(
            main,
            [
                "approve", "--log", str(log_b), "--model-id", "m1",
                "--timestamp", "2025-05-01T00:00:00Z", "--interactive",
            ],
            input="Risk Lead\nlooks good\n",
            catch_exceptions=False,
        )
        assert result.exit_code == 0, result.output
        assert log_a.read_bytes() == log_b.read_bytes()

    def test_waive_with_expiry_and_refs(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        run(runner, "init", "--log", str(log))
        result = run(
            runner, "waive", "--log", str(log), "--owner", "CRO",
            "--rationale", "pilot exception", "--deployment-id", "d1",
            "--scope", "jurisdiction=EU", "--constraint", "pilot users only",
            "--ref", "RISK-9", "--expires", "2026-01-01T00:00:00Z",
            "--no-interactive",
        )
        assert result.exit_code == 0, result.output
        record = json.loads(run(runner, "query", "--log", str(log), "--json").output)[0]
        assert record["details"]["expires"] == "2026-01-01T00:00:00Z"
        assert record["details"]["scope"]["jurisdiction"] == "EU"
        assert record["details"]["constraints"] == ["pilot users only"]


class TestFederationCommands:
    def test_export_and_pointer_round_trip(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        seed_ledger(runner, log)
        key_path = tmp_path / "writer.json"
        run(runner, "keygen", "--out", str(key_path))

        package_path = tmp_path / "pkg.json"
        result = run(
            runner, "export", "--log", str(log), "--model-id", "m1",
            "--sign-key", str(key_path), "--out", str(package_path), "--actor", "aud",
        )
        assert result.exit_code == 0, result.output

        records = json.loads(run(runner, "query", "--log", str(log), "--json").output)
        target = records[1]["event_id"]
        pointer_path = tmp_path / "ptr.json"
        result = run(
            runner, "pointer", "publish", "--log", str(log), "--event", target,
            "--summary", "i", "--sign-key", str(key_path), "--out", str(pointer_path),
        )
        assert result.exit_code == 0, result.output

        result = run(
            runner, "pointer", "verify", str(pointer_path),
            "--key", str(tmp_path / "writer.json.pub.json"),
            "--event-from", str(package_path),
        )
        assert result.exit_code == 0, result.output
        assert json.loads(result.output) == {"sig_ok": True, "event_ok": True}

        # bit-flip in the pointer file must flip the check and the exit code
        text = pointer_path.read_text().replace('"i":1', '"i":2')
        pointer_path.write_text(text)
        result = run(
            runner, "pointer", "verify", str(pointer_path),
            "--key", str(tmp_path / "writer.json.pub.json"),
        )
        assert result.exit_code == 1
        assert json.loads(result.output)["sig_ok"] is False


class TestIngest:
    def test_spool_drafts_appended_in_order(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        run(runner, "init", "--log", str(log))
        spool = tmp_path / "spool.jsonl"
        drafts = [
            {"event_type": "Evaluation", "system": "s", "actor": "a",
             "model_id": "m1", "details": {"i": i}}
            for i in range(3)
        ]
        spool.write_text("".join(json.dumps(d) + "\n" for d in drafts))
        result = run(runner, "ingest", "--log", str(log), "--spool", str(spool))
        assert result.exit_code == 0
        assert "3" in result.output
        assert verify_log(log).valid
        records = json.loads(run(runner, "query", "--log", str(log), "--json").output)
        assert [r["details"]["i"] for r in records] == [0, 1, 2]

    def test_bad_spool_line_aborts_before_any_append(self, runner, tmp_path):
        log = tmp_path / "t.jsonl"
        run(runner, "init", "--log", str(log))
        spool = tmp_path / "spool.jsonl"
        spool.write_text('{"event_type": "Evaluation"}\n')
        result = run(runner, "ingest", "--log", str(log), "--spool", str(spool))
        assert result.exit_code != 0
        assert json.loads(run(runner, "query", "--log", str(log), "--json").output) == []
