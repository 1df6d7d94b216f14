"""Random-access byte sources for reading and append-only sinks for writing."""

from __future__ import annotations

import os
from typing import Protocol, runtime_checkable


@runtime_checkable
class ByteSource(Protocol):
    @property
    def size(self) -> int: ...

    def read_at(self, offset: int, length: int): ...


class BytesSource:
    """A file image held in memory. Reads return zero-copy memoryviews."""

    def __init__(self, data):
        self._view = memoryview(data).cast("B")

    @property
    def size(self) -> int:
        return len(self._view)

    def read_at(self, offset: int, length: int):
        return self._view[offset : offset + length]

    def close(self) -> None:
        pass


class FileSource:
    """Local file read with ``pread``; there is no shared cursor."""

    def __init__(self, path):
        self.path = os.fspath(path)
        self._fd = os.open(self.path, os.O_RDONLY)
        self._size = os.fstat(self._fd).st_size

    @property
    def size(self) -> int:
        return self._size

    def read_at(self, offset: int, length: int) -> bytes:
        out = os.pread(self._fd, length, offset)
        if len(out) < length:  # pread may return short on some filesystems
            parts = [out]
            got = len(out)
            while got < length:
                more = os.pread(self._fd, length - got, offset + got)
                if not more:
                    break
                parts.append(more)
                got += len(more)
            out = b"".join(parts)
        return out

    def close(self) -> None:
        if self._fd >= 0:
            os.close(self._fd)
            self._fd = -1


def as_source(obj) -> ByteSource:
    if isinstance(obj, (str, os.PathLike)):
        return FileSource(obj)
    if isinstance(obj, (bytes, bytearray, memoryview)):
        return BytesSource(obj)
    if isinstance(obj, MemorySink):
        return BytesSource(obj.getvalue())
    if isinstance(obj, ByteSource):
        return obj
    raise TypeError(f"cannot read from {type(obj).__name__}")


class Sink:
    """Append-only byte sink."""

    def write(self, data) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass


class MemorySink(Sink):
    """Keeps written chunks in memory without copying ``bytes`` objects.

    This is the in-memory output used for tmpfs-style benchmarks.
    """

    def __init__(self):
        self._chunks: list[bytes] = []
        self.nbytes = 0
        self.closed = False

    def write(self, data) -> None:
        if not isinstance(data, bytes):
            data = bytes(data)
        self._chunks.append(data)
        self.nbytes += len(data)

    def getvalue(self) -> bytes:
        if len(self._chunks) > 1:
            self._chunks = [b"".join(self._chunks)]
        return self._chunks[0] if self._chunks else b""

    def close(self) -> None:
        self.closed = True


class FileSink(Sink):
    def __init__(self, path, buffering: int = 1 << 20):
        self.path = os.fspath(path)
        self._f = open(self.path, "wb", buffering=buffering)

    def write(self, data) -> None:
        self._f.write(data)

    def close(self) -> None:
        self._f.close()


class StreamSink(Sink):
    """Wraps a caller-owned writable file object; close only flushes it."""

    def __init__(self, fileobj):
        self._f = fileobj

    def write(self, data) -> None:
        self._f.write(data)

    def close(self) -> None:
        flush = getattr(self._f, "flush", None)
        if flush is not None:
            flush()


def as_sink(obj) -> Sink:
    if isinstance(obj, Sink):
        return obj
    if isinstance(obj, (str, os.PathLike)):
        return FileSink(obj)
    if hasattr(obj, "write"):
        return StreamSink(obj)
    raise TypeError(f"cannot write to {type(obj).__name__}")
