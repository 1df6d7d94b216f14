import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bkt import TypeCode, deserialize_values, plan_seal, serialize_values
from bkt.columns import ColumnBuffer
from bkt.errors import TrailingBytes, Truncated, ValueOutOfDomain

from helpers import same_values


def test_i32_little_endian():
    assert serialize_values(TypeCode.I32, [1]) == bytes.fromhex("01000000")
    assert serialize_values(TypeCode.I64, [-2]) == b"\xfe" + b"\xff" * 7


def test_empty_f64():
    assert serialize_values(TypeCode.F64, []) == b""
    assert len(deserialize_values(TypeCode.F64, b"", 0)) == 0


def test_var_bytes_length_prefix():
    assert serialize_values(TypeCode.VAR_BYTES, [b"ab"]) == bytes.fromhex("020000006162")
    assert serialize_values(TypeCode.VAR_BYTES, [b""]) == b"\0\0\0\0"


def test_trailing_bytes():
    with pytest.raises(TrailingBytes):
        deserialize_values(TypeCode.I32, b"\0" * 5, 1)
    with pytest.raises(TrailingBytes):
        deserialize_values(TypeCode.VAR_BYTES, b"\1\0\0\0ab", 1)


def test_truncated():
    with pytest.raises(Truncated):
        deserialize_values(TypeCode.VAR_BYTES, bytes.fromhex("0300000061"), 1)
    with pytest.raises(Truncated):
        deserialize_values(TypeCode.VAR_BYTES, b"\1\0", 1)
    with pytest.raises(Truncated):
        deserialize_values(TypeCode.F64, b"\0" * 15, 2)


def test_out_of_domain_values():
    with pytest.raises(ValueOutOfDomain):
        serialize_values(TypeCode.I32, [2**31])
    with pytest.raises(ValueOutOfDomain):
        serialize_values(TypeCode.I64, [1.5])
    with pytest.raises(ValueOutOfDomain):
        serialize_values(TypeCode.VAR_BYTES, ["text"])


values_by_type = {
    TypeCode.I32: st.lists(st.integers(-(2**31), 2**31 - 1)),
    TypeCode.I64: st.lists(st.integers(-(2**63), 2**63 - 1)),
    TypeCode.F32: st.lists(st.floats(width=32, allow_nan=False)),
    TypeCode.F64: st.lists(st.floats(allow_nan=True)),
    TypeCode.VAR_BYTES: st.lists(st.binary(max_size=40)),
}


@st.composite
def typed_values(draw):
    t = draw(st.sampled_from(list(TypeCode)))
    return t, draw(values_by_type[t])


@given(typed_values())
def test_serialize_round_trip(tv):
    t, values = tv
    raw = serialize_values(t, values)
    back = deserialize_values(t, raw, len(values))
    if t == TypeCode.VAR_BYTES:
        assert back == values
    else:
        expected = np.asarray(values, dtype={0: "<i4", 1: "<i8", 2: "<f4", 3: "<f8"}[t])
        assert same_values(t, back, expected)


def test_plan_seal_threshold():
    buf = ColumnBuffer(0, TypeCode.F64)
    buf.append(np.zeros(40 * 1024 // 8))
    assert plan_seal(buf, 32 * 1024)
    small = ColumnBuffer(0, TypeCode.F64)
    small.append(np.zeros(1024 // 8))
    assert not plan_seal(small, 32 * 1024)
    assert plan_seal(small, 32 * 1024, force=True)


def test_plan_seal_never_emits_empty_basket():
    assert not plan_seal(ColumnBuffer(0, TypeCode.I32), 1, force=True)


def test_take_advances_first_entry():
    buf = ColumnBuffer(3, TypeCode.I32, next_first_entry=10)
    buf.append(np.arange(5, dtype="<i4"))
    basket = buf.take()
    assert (basket.column_id, basket.first_entry, basket.n_entries) == (3, 10, 5)
    assert buf.next_first_entry == 15 and buf.pending_entries == 0 and buf.pending_bytes == 0
    assert basket.serialize() == np.arange(5, dtype="<i4").tobytes()


def test_oversized_var_entry_is_one_basket():
    buf = ColumnBuffer(0, TypeCode.VAR_BYTES)
    buf.append([b"x" * 1000])
    assert buf.pending_bytes == 1004
    assert plan_seal(buf, 16)
    assert buf.take().n_entries == 1


@settings(max_examples=60)
@given(typed_values(), st.integers(1, 200), st.data())
def test_partitioning_is_lossless(tv, target, data):
    """Feed rows one at a time, seal per plan_seal, and reassemble the baskets."""
    t, values = tv
    buf = ColumnBuffer(0, t)
    baskets = []
    for v in values:
        buf.append([v] if t == TypeCode.VAR_BYTES else np.asarray([v], dtype=serialize_dtype(t)))
        if plan_seal(buf, target):
            baskets.append(buf.take())
    if plan_seal(buf, target, force=True):
        baskets.append(buf.take())
    assert all(b.n_entries >= 1 for b in baskets)
    assert [b.first_entry for b in baskets] == list(np.cumsum([0] + [b.n_entries for b in baskets])[:-1])
    raw = b"".join(b.serialize() for b in baskets)
    assert raw == serialize_values(t, values)


def serialize_dtype(t):
    return {TypeCode.I32: "<i4", TypeCode.I64: "<i8", TypeCode.F32: "<f4", TypeCode.F64: "<f8"}[t]
