import json

import pytest

from mltrail_sdk import DeliveryFailed, EmitRejected, EmitterClient

from .conftest import run_cli


def spool_client(tmp_path, **kwargs) -> EmitterClient:
    return EmitterClient(
        system="test", actor="sdk", spool_path=tmp_path / "spool.jsonl", **kwargs
    )


class TestConfig:
    def test_exactly_one_destination_required(self, tmp_path):
        with pytest.raises(ValueError):
            EmitterClient(system="s", actor="a")
        with pytest.raises(ValueError):
            EmitterClient(
                system="s", actor="a",
                endpoint="http://x", spool_path=tmp_path / "s.jsonl",
            )


class TestLocalValidation:
    def test_unknown_event_type_rejected_before_delivery(self, tmp_path):
        client = spool_client(tmp_path)
        with pytest.raises(ValueError):
            client.emit("NotAnEvent", {"x": 1})
        assert not client.spool_path.exists()

    def test_unserializable_details_rejected(self, tmp_path):
        client = spool_client(tmp_path)
        with pytest.raises(ValueError):
            client.emit("Evaluation", {"x": object()}, model_id="m1")
        with pytest.raises(ValueError):
            client.emit("Evaluation", {"x": float("nan")}, model_id="m1")


class TestSpoolMode:
    def test_positions_and_order(self, tmp_path):
        client = spool_client(tmp_path, model_id="m1")
        first = client.emit("Evaluation", {"i": 0})
        second = client.emit("Evaluation", {"i": 1})
        assert (first.spool_position, second.spool_position) == (1, 2)
        lines = client.spool_path.read_text().splitlines()
        assert [json.loads(line)["details"]["i"] for line in lines] == [0, 1]

    def test_default_scope_merged_and_overridable(self, tmp_path):
        client = spool_client(tmp_path, model_id="m-default")
        client.emit("Evaluation", {})
        client.emit("Evaluation", {}, model_id="m-override")
        models = [
            json.loads(line)["model_id"]
            for line in client.spool_path.read_text().splitlines()
        ]
        assert models == ["m-default", "m-override"]

    def test_spool_ingests_into_a_valid_ledger(self, tmp_path):
        client = spool_client(tmp_path, model_id="m1")
        for i in range(3):
            client.emit("Evaluation", {"i": i})
        log = tmp_path / "trail.jsonl"
        assert run_cli("init", "--log", str(log)).returncode == 0
        ingest = run_cli("ingest", "--log", str(log), "--spool", str(client.spool_path))
        assert ingest.returncode == 0, ingest.stderr
        verify = run_cli("verify", "--log", str(log), "--json")
        assert verify.returncode == 0
        report = json.loads(verify.stdout)
        assert report["valid"] is True and report["events_checked"] == 3


class TestEndpointMode:
    def test_delivery_and_ack(self, tmp_path, service):
        client = EmitterClient(
            system="test", actor="sdk",
            endpoint=service.endpoint,
            retry_spool_path=tmp_path / "retry.jsonl",
        )
        ack = client.emit("Evaluation", {"accuracy": 0.5}, model_id="m1")
        assert ack.event_id
        assert service.get_events(model_id="m1")[0]["event_id"] == ack.event_id

    def test_rejected_draft_is_not_spooled(self, tmp_path, service):
        client = EmitterClient(
            system="test", actor="sdk",
            endpoint=service.endpoint,
            retry_spool_path=tmp_path / "retry.jsonl",
        )
        # Evaluation without any scope id fails the core's strict validation
        with pytest.raises(EmitRejected) as err:
            client.emit("Evaluation", {"accuracy": 0.5})
        assert any(v["field"] == "scope" for v in err.value.violations)
        assert not (tmp_path / "retry.jsonl").exists()

    def test_endpoint_down_spools_then_flush_succeeds(self, tmp_path, service):
        retry_spool = tmp_path / "retry.jsonl"
        dead = EmitterClient(
            system="test", actor="sdk",
            endpoint="http://127.0.0.1:9",  # nothing listens on the discard port
            retry_spool_path=retry_spool,
            timeout=0.5,
        )
        with pytest.raises(DeliveryFailed) as err:
            dead.emit("Evaluation", {"i": 1}, model_id="m1")
        assert err.value.spooled is True
        with pytest.raises(DeliveryFailed):
            dead.emit("Evaluation", {"i": 2}, model_id="m1")
        assert len(retry_spool.read_text().splitlines()) == 2

        live = EmitterClient(
            system="test", actor="sdk",
            endpoint=service.endpoint,
            retry_spool_path=retry_spool,
        )
        assert live.flush_retries() == 2
        assert retry_spool.read_text() == ""
        ledger_view = service.get_events(model_id="m1")
        assert [r["details"]["i"] for r in ledger_view] == [1, 2]
        assert service.verify()["valid"] is True
