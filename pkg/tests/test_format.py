import struct
import zlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bkt import (
    BasketHeader,
    FileHeader,
    Footer,
    IndexEntry,
    Schema,
    TypeCode,
    crc32,
    decode_basket,
    decode_metadata,
    encode_basket,
    encode_metadata,
)
from bkt.errors import (
    CrcMismatch,
    IndexInconsistent,
    InvalidSchema,
    LengthMismatch,
    MalformedFooter,
    MalformedHeader,
    Truncated,
)
from bkt.format import BASKET_HEADER_SIZE, decode_footer, encode_footer

from oracles import crc32_bitwise


def header_for(payload: bytes, **kw) -> BasketHeader:
    fields = dict(column_id=0, codec_id=0, n_entries=1, first_entry=0,
                  uncompressed_len=len(payload), compressed_len=len(payload), payload_crc=crc32(payload))
    fields.update(kw)
    return BasketHeader(**fields)


# -- crc32 --------------------------------------------------------------------

def test_crc32_empty_is_zero():
    assert crc32(b"") == 0


def test_crc32_check_value_matches_bitwise_oracle():
    assert crc32_bitwise(b"123456789") == 0xCBF43926
    assert crc32(b"123456789") == 0xCBF43926


@given(st.binary(max_size=300))
def test_crc32_agrees_with_bitwise_oracle(data):
    assert crc32(data) == crc32_bitwise(data)


@given(st.binary(min_size=1, max_size=200), st.data())
def test_crc32_detects_any_single_bit_flip(data, draw):
    bit = draw.draw(st.integers(0, len(data) * 8 - 1))
    flipped = bytearray(data)
    flipped[bit // 8] ^= 1 << (bit % 8)
    assert crc32(bytes(flipped)) != crc32(data)


# -- baskets ------------------------------------------------------------------

def test_basket_header_is_29_bytes_little_endian():
    payload = b"\x01\x00\x00\x00"
    out = encode_basket(header_for(payload), payload)
    assert BASKET_HEADER_SIZE == 29
    assert len(out) == 33
    assert out[:4] == b"\x00\x00\x00\x00"
    assert out[4] == 0
    h = header_for(payload, column_id=7, n_entries=3, first_entry=2**40 + 5)
    raw = encode_basket(h, payload)
    assert struct.unpack_from("<IBIQIII", raw) == (7, 0, 3, 2**40 + 5, 4, 4, crc32(payload))


def test_encode_basket_rejects_short_payload():
    with pytest.raises(LengthMismatch):
        encode_basket(header_for(b"abcd"), b"abc")


def test_encode_basket_rejects_wrong_crc():
    with pytest.raises(CrcMismatch):
        encode_basket(header_for(b"abcd", payload_crc=1), b"abcd")


basket_headers = st.builds(
    lambda col, codec, n, first, ulen, payload: (
        BasketHeader(col, codec, n, first, len(payload) if codec == 0 else ulen, len(payload), crc32(payload)),
        payload,
    ),
    st.integers(0, 2**32 - 1),
    st.sampled_from([0, 1]),
    st.integers(1, 2**32 - 1),
    st.integers(0, 2**64 - 1),
    st.integers(0, 2**32 - 1),
    st.binary(max_size=200),
)


@given(basket_headers)
def test_basket_round_trip(hp):
    h, p = hp
    assert decode_basket(encode_basket(h, p)) == (h, p)


@given(basket_headers, st.binary(max_size=10), st.data())
def test_decode_basket_at_offset(hp, prefix, data):
    h, p = hp
    blob = prefix + encode_basket(h, p) + b"tail"
    assert decode_basket(blob, len(prefix)) == (h, p)


@settings(max_examples=50)
@given(basket_headers, st.data())
def test_decode_basket_payload_bit_flip_is_crc_mismatch(hp, data):
    h, p = hp
    if not p:
        return
    raw = bytearray(encode_basket(h, p))
    bit = data.draw(st.integers(0, len(p) * 8 - 1))
    raw[BASKET_HEADER_SIZE + bit // 8] ^= 1 << (bit % 8)
    with pytest.raises(CrcMismatch):
        decode_basket(bytes(raw))


def test_decode_basket_truncated_by_one_byte():
    raw = encode_basket(header_for(b"payload!"), b"payload!")
    with pytest.raises(Truncated):
        decode_basket(raw[:-1])
    with pytest.raises(Truncated):
        decode_basket(raw[:10])


def test_decode_basket_returns_memoryview_slice_for_memoryview_input():
    raw = encode_basket(header_for(b"abcd"), b"abcd")
    _, payload = decode_basket(memoryview(raw))
    assert isinstance(payload, memoryview) and bytes(payload) == b"abcd"


# -- metadata -----------------------------------------------------------------

def test_file_header_bytes():
    head, _ = encode_metadata(FileHeader(), Footer(Schema.of(("x", "i32"))))
    assert head == bytes.fromhex("42 4B 54 31 01 00 00 00")


def test_empty_footer_ends_with_trailer():
    _, foot = encode_metadata(FileHeader(), Footer(Schema.of(("x", "i32"))))
    assert foot.endswith(b"BKTF")
    footer_len = struct.unpack_from("<I", foot, len(foot) - 8)[0]
    assert footer_len == len(foot) - 8


@pytest.mark.parametrize(
    "schema",
    [
        Schema.of(("a", "i32"), ("a", "f64")),
        Schema(()),
        Schema.of(("", "i32")),
        Schema.of(("x" * 256, "i32")),
    ],
)
def test_invalid_schemas_rejected(schema):
    with pytest.raises(InvalidSchema):
        encode_metadata(FileHeader(), Footer(schema))


def test_name_of_255_utf8_bytes_is_allowed():
    name = "é" * 127 + "x"  # 255 bytes
    schema = Schema.of((name, "bytes"))
    head, foot = encode_metadata(FileHeader(), Footer(schema))
    _, footer = decode_metadata(head + foot)
    assert footer.schema == schema


def test_empty_file_is_malformed_header():
    with pytest.raises(MalformedHeader):
        decode_metadata(b"")


def test_bad_magic_and_future_version():
    head, foot = encode_metadata(FileHeader(), Footer(Schema.of(("x", "i32"))))
    with pytest.raises(MalformedHeader):
        decode_metadata(b"XKT1" + head[4:] + foot)
    with pytest.raises(MalformedHeader):
        decode_metadata(FileHeader(version=2).encode() + foot)


def test_bad_trailer_and_footer_len():
    head, foot = encode_metadata(FileHeader(), Footer(Schema.of(("x", "i32"))))
    with pytest.raises(MalformedFooter):
        decode_metadata(head + foot[:-4] + b"XXXX")
    bad_len = foot[:-8] + struct.pack("<I", len(foot) + 100) + b"BKTF"
    with pytest.raises(MalformedFooter):
        decode_metadata(head + bad_len)
    short_len = foot[:-8] + struct.pack("<I", len(foot) - 9) + b"BKTF"
    with pytest.raises(MalformedFooter):
        decode_metadata(head + short_len)


def _footer_body(schema: Schema, index, total: int) -> bytes:
    parts = [schema.encode()]
    for col in index:
        parts.append(struct.pack("<I", len(col)))
        parts += [struct.pack("<QQI", *e) for e in col]
    parts.append(struct.pack("<Q", total))
    body = b"".join(parts)
    return body + struct.pack("<I", len(body)) + b"BKTF"


def test_unequal_column_totals_are_inconsistent():
    schema = Schema.of(("a", "i32"), ("b", "i32"))
    basket = encode_basket(header_for(b"\0" * 4), b"\0" * 4)
    data = FileHeader().encode() + basket * 2
    raw = data + _footer_body(schema, [[(8, 0, 1)], [(8 + 33, 0, 1), (8, 1, 1)]], 1)
    with pytest.raises(IndexInconsistent):
        decode_metadata(raw)


def test_non_contiguous_first_entry_is_inconsistent():
    schema = Schema.of(("a", "i32"))
    raw = FileHeader().encode() + b"\0" * 66 + _footer_body(schema, [[(8, 0, 1), (41, 2, 1)]], 3)
    with pytest.raises(IndexInconsistent):
        decode_metadata(raw)
    with pytest.raises(IndexInconsistent):
        encode_metadata(FileHeader(), Footer(schema, [[IndexEntry(8, 1, 1)]], 2))


def test_basket_offset_inside_footer_is_inconsistent():
    schema = Schema.of(("a", "i32"))
    raw = FileHeader().encode() + _footer_body(schema, [[(8, 0, 1)]], 1)
    with pytest.raises(IndexInconsistent):
        decode_metadata(raw)


names = st.text(st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=20)


@st.composite
def footers(draw, max_offset=2**40):
    cols = draw(st.lists(names, min_size=1, max_size=6, unique=True))
    schema = Schema(tuple((c, draw(st.sampled_from(list(TypeCode)))) for c in cols))
    sizes = draw(st.lists(st.integers(1, 50), max_size=6))
    total = sum(sizes)
    index = []
    for _ in cols:
        parts, first, remaining = [], 0, total
        while remaining:
            n = draw(st.integers(1, remaining))
            parts.append(IndexEntry(draw(st.integers(8, max_offset)), first, n))
            first += n
            remaining -= n
        index.append(parts)
    return Footer(schema, index, total)


@given(footers(max_offset=4096))
def test_metadata_round_trip_is_canonical(footer):
    head, foot = encode_metadata(FileHeader(), footer)
    # pad so every indexed offset lies before the footer
    biggest = max((e.file_offset for col in footer.index for e in col), default=0)
    pad = b"\0" * max(0, biggest + BASKET_HEADER_SIZE - len(head))
    h, f = decode_metadata(head + pad + foot)
    assert (h, f) == (FileHeader(), footer)
    assert encode_metadata(h, f) == (head, foot)


@given(footers(max_offset=2**64 - 1))
def test_footer_body_round_trip_with_wide_offsets(footer):
    foot = encode_footer(footer)
    assert decode_footer(foot[:-8]) == footer


def test_crc_is_over_compressed_payload():
    raw = b"a" * 1000
    c = zlib.compressobj(6, zlib.DEFLATED, -15)
    payload = c.compress(raw) + c.flush()
    h = BasketHeader(0, 1, 1000, 0, 1000, len(payload), crc32(payload))
    got, p = decode_basket(encode_basket(h, payload))
    assert got.payload_crc == zlib.crc32(payload) and p == payload
