"""Block codecs keyed by the one-byte id stored in every basket header.

Both built-in codecs are stateless; zlib releases the GIL while it works,
which is what lets baskets be (de)compressed on worker threads.
"""

from __future__ import annotations

import enum
import zlib
from typing import Protocol

from .errors import CorruptStream, LengthMismatch, UnknownCodec

DEFAULT_LEVEL = 6


class CodecId(enum.IntEnum):
    STORE = 0
    DEFLATE = 1

    @classmethod
    def parse(cls, value: "CodecId | int | str") -> "CodecId | int":
        if isinstance(value, str):
            try:
                return cls[value.upper()]
            except KeyError:
                raise UnknownCodec(f"unknown codec {value!r}") from None
        return value


class Codec(Protocol):
    def compress(self, data, level: int) -> bytes: ...

    def decompress(self, data, expected_len: int) -> bytes: ...


class Store:
    def compress(self, data, level: int) -> bytes:
        return bytes(data)

    def decompress(self, data, expected_len: int) -> bytes:
        if len(data) != expected_len:
            raise LengthMismatch(f"stored payload is {len(data)} bytes, expected {expected_len}")
        return bytes(data)


class Deflate:
    """Raw RFC 1951 streams, no zlib or gzip wrapper."""

    def compress(self, data, level: int) -> bytes:
        c = zlib.compressobj(level, zlib.DEFLATED, -15)
        return c.compress(data) + c.flush()

    def decompress(self, data, expected_len: int) -> bytes:
        d = zlib.decompressobj(-15)
        try:
            # one byte of slack so an overlong stream shows up as a length error
            out = d.decompress(data, expected_len + 1)
        except zlib.error as exc:
            raise CorruptStream(f"deflate: {exc}") from None
        if len(out) != expected_len:
            if len(out) > expected_len or d.eof:
                raise LengthMismatch(f"stream decodes to more or fewer than {expected_len} bytes")
        if not d.eof:
            raise CorruptStream("deflate stream is truncated")
        if d.unused_data:
            raise CorruptStream(f"{len(d.unused_data)} bytes after end of deflate stream")
        return out


_REGISTRY: dict[int, Codec] = {CodecId.STORE: Store(), CodecId.DEFLATE: Deflate()}


def register(codec_id: int, codec: Codec) -> None:
    if not 2 <= codec_id <= 255:
        raise ValueError("codec ids 0 and 1 are built in; custom ids must be in 2..255")
    _REGISTRY[codec_id] = codec


def get(codec_id: int) -> Codec:
    try:
        return _REGISTRY[codec_id]
    except KeyError:
        raise UnknownCodec(f"codec id {codec_id} is not registered") from None


def compress(codec_id: int, level: int, data) -> bytes:
    if not 0 <= level <= 9:
        raise ValueError(f"compression level must be 0..9, got {level}")
    return get(codec_id).compress(data, level)


def decompress(codec_id: int, data, expected_len: int) -> bytes:
    return get(codec_id).decompress(data, expected_len)
