"""On-disk layout of ``.bkt`` files.

A file is written in a single streaming pass::

    "BKT1" u32 version
    basket*                       (29-byte header + compressed payload)
    schema index u64 total_entries
    u32 footer_len "BKTF"

All integers are little-endian. ``footer_len`` counts the schema, index and
``total_entries`` bytes, so the footer is found by reading the last eight
bytes of the file and stepping back.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

from .errors import (
    CrcMismatch,
    FormatError,
    IndexInconsistent,
    InvalidSchema,
    LengthMismatch,
    MalformedFooter,
    MalformedHeader,
    NoSuchColumn,
    Truncated,
)

MAGIC = b"BKT1"
TRAILER_MAGIC = b"BKTF"
VERSION = 1
FILE_HEADER_SIZE = 8
TRAILER_SIZE = 8
MAX_NAME_BYTES = 255

_FILE_HEADER = struct.Struct("<4sI")
_BASKET_HEADER = struct.Struct("<IBIQIII")
_TRAILER = struct.Struct("<I4s")
_INDEX_ENTRY = struct.Struct("<QQI")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")

BASKET_HEADER_SIZE = _BASKET_HEADER.size  # 29


def crc32(data) -> int:
    """CRC-32/ISO-HDLC of ``data`` (any bytes-like object)."""
    return zlib.crc32(data) & 0xFFFFFFFF


class TypeCode(enum.IntEnum):
    I32 = 0
    I64 = 1
    F32 = 2
    F64 = 3
    VAR_BYTES = 4

    @property
    def width(self) -> int | None:
        """Bytes per entry, or None for variable-length entries."""
        return _WIDTHS[self]

    @classmethod
    def parse(cls, value: "TypeCode | int | str") -> "TypeCode":
        if isinstance(value, str):
            try:
                return _TYPE_NAMES[value.lower()]
            except KeyError:
                raise InvalidSchema(f"unknown column type {value!r}") from None
        try:
            return cls(value)
        except ValueError:
            raise InvalidSchema(f"unknown type code {value!r}") from None


_WIDTHS = {
    TypeCode.I32: 4,
    TypeCode.I64: 8,
    TypeCode.F32: 4,
    TypeCode.F64: 8,
    TypeCode.VAR_BYTES: None,
}
_TYPE_NAMES = {
    "i32": TypeCode.I32,
    "i64": TypeCode.I64,
    "f32": TypeCode.F32,
    "f64": TypeCode.F64,
    "bytes": TypeCode.VAR_BYTES,
    "var-bytes": TypeCode.VAR_BYTES,
    "var_bytes": TypeCode.VAR_BYTES,
}


class Column(NamedTuple):
    name: str
    type: TypeCode


@dataclass(frozen=True)
class Schema:
    """Ordered, named, typed columns. A column's id is its position.

    Construction does not validate, so malformed schemas can be represented
    and rejected by :meth:`validate` at the point of use.
    """

    columns: tuple[Column, ...]

    def __post_init__(self):
        cols = tuple(Column(str(name), TypeCode.parse(t)) for name, t in self.columns)
        object.__setattr__(self, "columns", cols)

    @classmethod
    def of(cls, *columns: tuple[str, "TypeCode | int | str"]) -> "Schema":
        return cls(tuple(columns))

    def __len__(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def types(self) -> list[TypeCode]:
        return [c.type for c in self.columns]

    def column_id(self, name: str) -> int:
        for i, col in enumerate(self.columns):
            if col.name == name:
                return i
        raise NoSuchColumn(f"no column named {name!r}")

    def validate(self) -> "Schema":
        if not self.columns:
            raise InvalidSchema("schema needs at least one column")
        seen = set()
        for col in self.columns:
            raw = col.name.encode("utf-8")
            if not raw:
                raise InvalidSchema("column names must be non-empty")
            if len(raw) > MAX_NAME_BYTES:
                raise InvalidSchema(f"column name longer than {MAX_NAME_BYTES} bytes: {col.name[:32]!r}...")
            if col.name in seen:
                raise InvalidSchema(f"duplicate column name {col.name!r}")
            seen.add(col.name)
        return self

    def encode(self) -> bytes:
        self.validate()
        parts = [_U32.pack(len(self.columns))]
        for col in self.columns:
            raw = col.name.encode("utf-8")
            parts.append(bytes([len(raw)]) + raw + bytes([col.type]))
        return b"".join(parts)


@dataclass(frozen=True)
class FileHeader:
    magic: bytes = MAGIC
    version: int = VERSION

    def encode(self) -> bytes:
        return _FILE_HEADER.pack(self.magic, self.version)


@dataclass(frozen=True)
class BasketHeader:
    column_id: int
    codec_id: int
    n_entries: int
    first_entry: int
    uncompressed_len: int
    compressed_len: int
    payload_crc: int

    def pack(self) -> bytes:
        return _BASKET_HEADER.pack(
            self.column_id,
            self.codec_id,
            self.n_entries,
            self.first_entry,
            self.uncompressed_len,
            self.compressed_len,
            self.payload_crc,
        )

    @classmethod
    def unpack_from(cls, data, offset: int = 0) -> "BasketHeader":
        return cls(*_BASKET_HEADER.unpack_from(data, offset))

    def rebased(self, offset: int) -> "BasketHeader":
        return replace(self, first_entry=self.first_entry + offset)


class IndexEntry(NamedTuple):
    file_offset: int
    first_entry: int
    n_entries: int


def _as_index(index: Iterable[Iterable]) -> tuple[tuple[IndexEntry, ...], ...]:
    return tuple(tuple(IndexEntry(*e) for e in col) for col in index)


@dataclass(frozen=True)
class Footer:
    schema: Schema
    index: tuple[tuple[IndexEntry, ...], ...] = field(default=())
    total_entries: int = 0

    def __post_init__(self):
        index = _as_index(self.index)
        if not index:
            index = tuple(() for _ in self.schema.columns)
        object.__setattr__(self, "index", index)


def _check_basket_header(header: BasketHeader) -> None:
    if header.n_entries < 1:
        raise FormatError("basket must hold at least one entry")
    if header.codec_id == 0 and header.compressed_len != header.uncompressed_len:
        raise FormatError("stored basket with differing compressed and uncompressed lengths")


def encode_basket(header: BasketHeader, payload) -> bytes:
    """Serialize one basket: the 29-byte header followed by the payload."""
    if len(payload) != header.compressed_len:
        raise LengthMismatch(f"payload is {len(payload)} bytes, header says {header.compressed_len}")
    if crc32(payload) != header.payload_crc:
        raise CrcMismatch("header crc does not match payload")
    _check_basket_header(header)
    return header.pack() + bytes(payload)


def decode_basket(data, at: int = 0):
    """Parse the basket starting at ``at``; returns ``(header, payload)``.

    The payload is a slice of ``data`` (a memoryview stays a memoryview).
    """
    if at < 0 or len(data) - at < BASKET_HEADER_SIZE:
        raise Truncated(f"need {BASKET_HEADER_SIZE} header bytes at offset {at}, have {max(len(data) - at, 0)}")
    header = BasketHeader.unpack_from(data, at)
    start = at + BASKET_HEADER_SIZE
    end = start + header.compressed_len
    if end > len(data):
        raise Truncated(f"basket payload needs {header.compressed_len} bytes, {len(data) - start} remain")
    _check_basket_header(header)
    payload = data[start:end]
    if crc32(payload) != header.payload_crc:
        raise CrcMismatch(f"payload crc {crc32(payload):#010x} != stored {header.payload_crc:#010x}")
    return header, payload


def check_index(index: Sequence[Sequence[IndexEntry]], total_entries: int) -> None:
    for column_id, entries in enumerate(index):
        expected = 0
        for entry in entries:
            if entry.n_entries < 1:
                raise IndexInconsistent(f"column {column_id}: empty basket in index")
            if entry.first_entry != expected:
                raise IndexInconsistent(
                    f"column {column_id}: basket starts at entry {entry.first_entry}, expected {expected}"
                )
            expected += entry.n_entries
        if expected != total_entries:
            raise IndexInconsistent(f"column {column_id} holds {expected} entries, footer says {total_entries}")


def encode_footer(footer: Footer) -> bytes:
    schema_bytes = footer.schema.encode()
    if len(footer.index) != len(footer.schema):
        raise IndexInconsistent("index and schema disagree on the number of columns")
    check_index(footer.index, footer.total_entries)
    parts = [schema_bytes]
    for entries in footer.index:
        parts.append(_U32.pack(len(entries)))
        parts.extend(_INDEX_ENTRY.pack(*e) for e in entries)
    parts.append(_U64.pack(footer.total_entries))
    body = b"".join(parts)
    return body + _TRAILER.pack(len(body), TRAILER_MAGIC)


def encode_metadata(header: FileHeader, footer: Footer) -> tuple[bytes, bytes]:
    return header.encode(), encode_footer(footer)


def decode_file_header(data) -> FileHeader:
    if len(data) < FILE_HEADER_SIZE:
        raise MalformedHeader("file too short for header")
    magic, version = _FILE_HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise MalformedHeader(f"bad magic {bytes(magic)!r}")
    if version != VERSION:
        raise MalformedHeader(f"unsupported version {version}")
    return FileHeader(magic, version)


def locate_footer(trailer, file_len: int) -> tuple[int, int]:
    """From the last eight bytes, return ``(footer_offset, footer_len)``."""
    if file_len < FILE_HEADER_SIZE + TRAILER_SIZE or len(trailer) != TRAILER_SIZE:
        raise MalformedFooter("file too short for trailer")
    footer_len, magic = _TRAILER.unpack(trailer)
    if magic != TRAILER_MAGIC:
        raise MalformedFooter(f"bad trailer magic {bytes(magic)!r}")
    start = file_len - TRAILER_SIZE - footer_len
    if start < FILE_HEADER_SIZE:
        raise MalformedFooter(f"footer_len {footer_len} runs past the file header")
    return start, footer_len


class _Cursor:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n: int):
        if self.pos + n > len(self.data):
            raise MalformedFooter("footer ends early")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))


def decode_footer(body, footer_offset: int | None = None) -> Footer:
    """Decode the footer body (schema, index, total_entries; no trailer).

    With ``footer_offset`` given, every indexed basket header must also lie
    before the footer.
    """
    cur = _Cursor(body)
    (ncols,) = cur.unpack(_U32)
    cols = []
    for _ in range(ncols):
        name_len = cur.take(1)[0]
        try:
            name = bytes(cur.take(name_len)).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFooter(f"column name is not UTF-8: {exc}") from None
        code = cur.take(1)[0]
        try:
            cols.append(Column(name, TypeCode(code)))
        except ValueError:
            raise MalformedFooter(f"unknown type code {code}") from None
    schema = Schema(tuple(cols))
    try:
        schema.validate()
    except InvalidSchema as exc:
        raise MalformedFooter(str(exc)) from None
    index = []
    for _ in range(ncols):
        (nb,) = cur.unpack(_U32)
        raw = cur.take(nb * _INDEX_ENTRY.size)
        index.append(tuple(IndexEntry(*t) for t in _INDEX_ENTRY.iter_unpack(raw)))
    (total,) = cur.unpack(_U64)
    if cur.pos != len(body):
        raise MalformedFooter(f"{len(body) - cur.pos} unexpected bytes at end of footer")
    check_index(index, total)
    if footer_offset is not None:
        for column_id, entries in enumerate(index):
            for e in entries:
                if e.file_offset < FILE_HEADER_SIZE or e.file_offset + BASKET_HEADER_SIZE > footer_offset:
                    raise IndexInconsistent(f"column {column_id}: basket offset {e.file_offset} outside data region")
    return Footer(schema, tuple(index), total)


def decode_metadata(data) -> tuple[FileHeader, Footer]:
    """Decode header and footer from a complete in-memory file image."""
    header = decode_file_header(data)
    start, footer_len = locate_footer(data[len(data) - TRAILER_SIZE :], len(data))
    return header, decode_footer(data[start : start + footer_len], start)
