import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mltrail.canonical import (
    NonCanonicalizable,
    canonical_dumps,
    canonical_serialize,
    loads_strict,
)

json_scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(min_value=-(10**9), max_value=10**9),
    st.floats(allow_nan=False, allow_infinity=False),
    st.text(max_size=20),
)
json_trees = st.recursive(
    json_scalars,
    lambda children: st.one_of(
        st.lists(children, max_size=4),
        st.dictionaries(st.text(max_size=8), children, max_size=4),
    ),
    max_leaves=25,
)


def test_sorts_keys():
    assert canonical_serialize({"b": 1, "a": "x"}) == b'{"a":"x","b":1}'


def test_sorts_keys_recursively():
    assert canonical_serialize({"a": {"z": True, "y": None}}) == b'{"a":{"y":null,"z":true}}'


def test_no_whitespace_and_unicode_passthrough():
    assert canonical_serialize({"k": "héllo"}) == '{"k":"héllo"}'.encode("utf-8")


def test_int_never_uses_exponent():
    assert canonical_serialize(10**24) == b"1000000000000000000000000"


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
def test_nonfinite_rejected(bad):
    with pytest.raises(NonCanonicalizable):
        canonical_serialize({"x": bad})


def test_nonstring_keys_rejected():
    with pytest.raises(NonCanonicalizable):
        canonical_serialize({1: "a"})


def test_foreign_types_rejected():
    with pytest.raises(NonCanonicalizable):
        canonical_serialize({"x": object()})
    with pytest.raises(NonCanonicalizable):
        canonical_serialize({"x": (1, 2)})


@given(json_trees)
def test_serialize_parse_serialize_is_identity(value):
    once = canonical_serialize(value)
    assert canonical_serialize(json.loads(once)) == once


@given(st.dictionaries(st.text(max_size=8), json_trees, max_size=6))
def test_map_insertion_order_is_irrelevant(mapping):
    shuffled = dict(reversed(list(mapping.items())))
    assert canonical_serialize(mapping) == canonical_serialize(shuffled)


@given(json_trees)
def test_dumps_round_trips_values(value):
    parsed = json.loads(canonical_dumps(value))
    if isinstance(value, float):
        assert math.isclose(parsed, value, rel_tol=0, abs_tol=0) or parsed == value
    else:
        assert parsed == value


def test_loads_strict_rejects_nan_extension():
    with pytest.raises(ValueError):
        loads_strict('{"a": NaN}')
    with pytest.raises(ValueError):
        loads_strict("[Infinity]")
    assert loads_strict('{"a": 1.5}') == {"a": 1.5}
