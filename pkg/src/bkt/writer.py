"""Sequential and column-parallel file writing.

Rows are staged per column. A column's pending entries are sealed
(serialised, compressed, checksummed) as soon as they reach the basket
target, exactly as if rows had been appended one at a time. When IMT is on,
the columns that come due together are sealed on a thread pool; sealed
baskets always reach the sink in ascending column order, so the file bytes
do not depend on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import codec as codecs
from . import config
from .columns import ColumnBuffer, PendingBasket, coerce_values, plan_seal, rows_until_due
from .errors import BktError, ClosedWriter, SinkError, TypeMismatch, ValueOutOfDomain
from .format import (
    BASKET_HEADER_SIZE,
    BasketHeader,
    FileHeader,
    Footer,
    IndexEntry,
    Schema,
    TypeCode,
    crc32,
    encode_footer,
)
from .io import Sink, as_sink

DEFAULT_BASKET_BYTES = 32 * 1024
_U32_MAX = 2**32 - 1


@dataclass
class WriterOptions:
    basket_target_bytes: int = DEFAULT_BASKET_BYTES
    codec: int = codecs.CodecId.DEFLATE
    level: int = codecs.DEFAULT_LEVEL
    imt_enabled: bool = field(default_factory=config.imt_enabled)
    thread_count: int = field(default_factory=config.imt_thread_count)

    def __post_init__(self):
        self.codec = codecs.CodecId.parse(self.codec)
        codecs.get(self.codec)
        if self.basket_target_bytes < 1:
            raise ValueError("basket_target_bytes must be at least 1")
        if not 0 <= self.level <= 9:
            raise ValueError("level must be in 0..9")
        if self.thread_count < 1:
            raise ValueError("thread_count must be positive")


@dataclass(frozen=True)
class SealedBasket:
    header: BasketHeader
    payload: bytes

    @property
    def nbytes(self) -> int:
        return BASKET_HEADER_SIZE + len(self.payload)


@dataclass(frozen=True)
class WriteSummary:
    total_entries: int
    baskets: int
    bytes_written: int


def seal(pending: PendingBasket, codec_id: int, level: int) -> SealedBasket:
    """Serialise, compress and checksum one basket. Safe on any thread."""
    try:
        raw = pending.serialize()
        if len(raw) > _U32_MAX:
            raise ValueOutOfDomain(f"basket of {len(raw)} bytes exceeds the u32 length field")
        payload = codecs.compress(codec_id, level, raw)
        if len(payload) > _U32_MAX:
            raise ValueOutOfDomain(f"compressed basket of {len(payload)} bytes exceeds the u32 length field")
    except BktError as exc:
        raise exc.attach(pending.column_id, pending.first_entry)
    header = BasketHeader(
        column_id=pending.column_id,
        codec_id=int(codec_id),
        n_entries=pending.n_entries,
        first_entry=pending.first_entry,
        uncompressed_len=len(raw),
        compressed_len=len(payload),
        payload_crc=crc32(payload),
    )
    return SealedBasket(header, payload)


def coerce_columns(schema: Schema, columns: Sequence) -> list:
    """Validate a columnar batch against ``schema`` without side effects."""
    if len(columns) != len(schema):
        raise TypeMismatch(f"expected {len(schema)} columns, got {len(columns)}")
    out = []
    for col, values in zip(schema.columns, columns):
        try:
            out.append(coerce_values(col.type, values))
        except (TypeMismatch, ValueOutOfDomain) as exc:
            raise type(exc)(f"column {col.name!r}: {exc}") from None
    lengths = {len(v) for v in out}
    if len(lengths) > 1:
        raise TypeMismatch(f"columns have differing lengths {sorted(lengths)}")
    return out


def rows_to_columns(schema: Schema, rows) -> list:
    rows = list(rows)
    ncols = len(schema)
    for i, row in enumerate(rows):
        if len(row) != ncols:
            raise TypeMismatch(f"row {i} has {len(row)} values, schema has {ncols} columns")
    if not rows:
        return [[] for _ in range(ncols)]
    return [list(c) for c in zip(*rows)]


class ColumnStager:
    """Per-column buffers plus the seal schedule shared by files and MemFiles.

    ``executor`` of None seals inline on the calling thread.
    """

    def __init__(self, schema: Schema, options: WriterOptions, executor: ThreadPoolExecutor | None = None):
        self.schema = schema
        self.options = options
        self.executor = executor
        self.buffers = [ColumnBuffer(i, col.type) for i, col in enumerate(schema.columns)]

    def append(self, columns: list, emit: Callable[[list[SealedBasket]], None]) -> None:
        n = len(columns[0])
        if n == 0:
            return
        target = self.options.basket_target_bytes
        sizes = []
        for buf, values in zip(self.buffers, columns):
            if buf.type == TypeCode.VAR_BYTES:
                lens = np.fromiter((len(v) for v in values), dtype=np.int64, count=n)
                sizes.append(np.cumsum(lens + 4))
            else:
                sizes.append(None)
        due = [rows_until_due(buf, target, sizes[j], 0, n) for j, buf in enumerate(self.buffers)]
        pos = 0
        while True:
            m = min(due)
            stop = min(m, n)
            if stop > pos:
                for j, buf in enumerate(self.buffers):
                    nbytes = None
                    if sizes[j] is not None:
                        nbytes = int(sizes[j][stop - 1]) - (int(sizes[j][pos - 1]) if pos else 0)
                    buf.append(columns[j][pos:stop], nbytes)
                pos = stop
            if m > n:
                break
            emit(self.seal(force=False))
            for j, buf in enumerate(self.buffers):
                if buf.pending_entries == 0:
                    due[j] = rows_until_due(buf, target, sizes[j], pos, n)
        for buf in self.buffers:
            buf.own_chunks()

    def seal(self, force: bool) -> list[SealedBasket]:
        target = self.options.basket_target_bytes
        todo = [buf.take() for buf in self.buffers if plan_seal(buf, target, force)]
        if not todo:
            return []
        codec_id, level = self.options.codec, self.options.level
        if self.executor is None or len(todo) == 1:
            return [seal(p, codec_id, level) for p in todo]
        futures = [self.executor.submit(seal, p, codec_id, level) for p in todo]
        wait(futures)
        # the error of the lowest column id wins, independent of timing
        return [f.result() for f in futures]


class FileWriter:
    """Writes one ``.bkt`` file. Single owner: one thread drives it."""

    def __init__(self, sink, schema: Schema, options: WriterOptions | None = None):
        self.schema = schema.validate()
        self.options = options or WriterOptions()
        try:
            self._sink: Sink = as_sink(sink)
        except OSError as exc:
            raise SinkError(f"cannot open sink: {exc}") from exc
        self._executor = None
        if self.options.imt_enabled:
            self._executor = ThreadPoolExecutor(self.options.thread_count, thread_name_prefix="bkt-seal")
        self._stager = ColumnStager(schema, self.options, self._executor)
        self._index: list[list[IndexEntry]] = [[] for _ in schema.columns]
        self._offset = 0
        self._baskets = 0
        self.rows_appended = 0
        self.closed = False
        try:
            self._write(FileHeader().encode())
        except SinkError:
            self._shutdown()
            raise

    def __enter__(self) -> "FileWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if self.closed:
            return
        if exc_type is None:
            self.close()
        else:
            self.abort()

    @property
    def buffers(self) -> list[ColumnBuffer]:
        return self._stager.buffers

    @property
    def baskets_written(self) -> int:
        return self._baskets

    def _write(self, data) -> None:
        try:
            self._sink.write(data)
        except SinkError:
            raise
        except Exception as exc:
            raise SinkError(f"sink write failed: {exc}") from exc
        self._offset += len(data)

    def write_sealed(self, basket: SealedBasket) -> None:
        h = basket.header
        self._index[h.column_id].append(IndexEntry(self._offset, h.first_entry, h.n_entries))
        self._write(h.pack())
        self._write(basket.payload)
        self._baskets += 1

    def _emit(self, baskets: list[SealedBasket]) -> None:
        for b in baskets:
            self.write_sealed(b)

    def _check_open(self) -> None:
        if self.closed:
            raise ClosedWriter("writer is closed")

    def append_rows(self, rows) -> None:
        """Append row tuples (one value per column). All-or-nothing on bad input."""
        self._check_open()
        self.append_columns(rows_to_columns(self.schema, rows))

    def append_columns(self, columns: Sequence) -> None:
        """Append a columnar batch: one equal-length sequence per column."""
        self._check_open()
        cols = coerce_columns(self.schema, columns)
        self._stager.append(cols, self._emit)
        self.rows_appended += len(cols[0])

    def seal_baskets(self, force: bool = False) -> int:
        self._check_open()
        sealed = self._stager.seal(force)
        self._emit(sealed)
        return len(sealed)

    def close(self) -> WriteSummary:
        self._check_open()
        try:
            self.seal_baskets(force=True)
            footer = Footer(self.schema, tuple(tuple(c) for c in self._index), self.rows_appended)
            self._write(encode_footer(footer))
            try:
                self._sink.close()
            except Exception as exc:
                raise SinkError(f"closing sink failed: {exc}") from exc
        finally:
            self.closed = True
            self._shutdown()
        return WriteSummary(self.rows_appended, self._baskets, self._offset)

    def abort(self) -> None:
        """Stop without writing a footer; the output is left incomplete."""
        self.closed = True
        self._shutdown()
        try:
            self._sink.close()
        except Exception:
            pass

    def _shutdown(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None


def create(sink, schema: Schema, options: WriterOptions | None = None) -> FileWriter:
    return FileWriter(sink, schema, options)
