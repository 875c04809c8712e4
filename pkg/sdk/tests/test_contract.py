"""Contract tests against the core's shipped schema document: every draft the
SDK produces must pass the core's strict validation shape."""

import json

import pytest
from jsonschema import Draft202012Validator

from mltrail_sdk import EmitterClient, register_dataset, serving_middleware, training_callback
from mltrail_sdk.taxonomy import EVENT_TYPES

from .conftest import core_schema


@pytest.fixture(scope="module")
def draft_validator():
    schema = core_schema()
    Draft202012Validator.check_schema(schema)
    return Draft202012Validator({"$ref": "#/$defs/event_draft", "$defs": schema["$defs"]})


def test_taxonomy_matches_core_schema_enum():
    assert EVENT_TYPES == frozenset(core_schema()["$defs"]["event_type"]["enum"])


def test_all_sdk_surfaces_produce_schema_valid_drafts(tmp_path, draft_validator):
    client = EmitterClient(
        system="pipeline", actor="sdk", spool_path=tmp_path / "spool.jsonl"
    )
    client.emit("ModelDeployed", {"version": "v3"}, deployment_id="d-1")
    register_dataset(
        client, dataset_id="ds", source="s3://corpus", version="v2",
        rows=10, license="cc-by",
    )
    callback = training_callback(client, model_id="m-1")
    callback.on_train_begin({"learning_rate": 0.001, "epochs": 2})
    callback.on_epoch_end(1, {"loss": 1.0})
    callback.on_evaluate({"accuracy": 0.8})
    callback.on_save("ckpt/1", step=10)
    callback.on_train_end({"loss": 0.7})
    middleware = serving_middleware(client, deployment_id="d-1", redact=False)
    middleware.wrap(lambda p, m, b: b"ok")("/infer", "POST", b"body-1")

    lines = client.spool_path.read_text().splitlines()
    assert len(lines) == 9
    for line in lines:
        draft_validator.validate(json.loads(line))
