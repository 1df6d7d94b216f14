"""Reading columns sequentially, column-parallel, or basket-pipelined.

The unit of work for :meth:`FileReader.read_columns_parallel` is a whole
column; :meth:`FileReader.read_column_pipelined` schedules individual
baskets and hands them to a consumer in entry order while later baskets are
still being decompressed.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import codec, config
from .columns import ColumnValues, concat_values, deserialize_values
from .errors import BktError, ConsumerError, CrcMismatch, FormatError, Truncated
from .format import (
    BASKET_HEADER_SIZE,
    FILE_HEADER_SIZE,
    TRAILER_SIZE,
    BasketHeader,
    FileHeader,
    Footer,
    IndexEntry,
    Schema,
    crc32,
    decode_file_header,
    decode_footer,
    locate_footer,
)
from .io import ByteSource, as_source


@dataclass
class ReadOptions:
    imt_enabled: bool = field(default_factory=config.imt_enabled)
    thread_count: int = field(default_factory=config.imt_thread_count)
    pipeline_window: int | None = None

    def __post_init__(self):
        if self.thread_count < 1:
            raise ValueError("thread_count must be positive")
        if self.pipeline_window is None:
            self.pipeline_window = 2 * self.thread_count
        if self.pipeline_window < 1:
            raise ValueError("pipeline_window must be positive")


@dataclass(frozen=True)
class BasketFailure:
    column: str
    column_id: int
    first_entry: int
    reason: str


@dataclass
class VerifyReport:
    baskets: int
    failures: list[BasketFailure]

    @property
    def passed(self) -> int:
        return self.baskets - len(self.failures)

    @property
    def ok(self) -> bool:
        return not self.failures


class FileReader:
    """An opened file. Immutable after open and shareable across threads."""

    def __init__(self, source, options: ReadOptions | None = None):
        self.options = options or ReadOptions()
        self.source: ByteSource = as_source(source)
        self._owns_source = self.source is not source
        try:
            size = self.source.size
            self.header: FileHeader = decode_file_header(self.source.read_at(0, min(size, FILE_HEADER_SIZE)))
            trailer = self.source.read_at(max(size - TRAILER_SIZE, 0), min(size, TRAILER_SIZE))
            start, footer_len = locate_footer(trailer, size)
            self.footer: Footer = decode_footer(self.source.read_at(start, footer_len), start)
        except BaseException:
            self.close()
            raise

    def __enter__(self) -> "FileReader":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._owns_source:
            self.source.close()

    @property
    def schema(self) -> Schema:
        return self.footer.schema

    @property
    def total_entries(self) -> int:
        return self.footer.total_entries

    @property
    def index(self) -> tuple[tuple[IndexEntry, ...], ...]:
        return self.footer.index

    # -- single basket ------------------------------------------------------

    def read_basket(self, column_id: int, entry: IndexEntry) -> tuple[BasketHeader, bytes]:
        """Fetch and CRC-check one basket's compressed payload."""
        try:
            raw = self.source.read_at(entry.file_offset, BASKET_HEADER_SIZE)
            if len(raw) < BASKET_HEADER_SIZE:
                raise Truncated("basket header runs past end of file")
            header = BasketHeader.unpack_from(raw)
            if (header.column_id, header.first_entry, header.n_entries) != (column_id, entry.first_entry, entry.n_entries):
                raise FormatError(
                    f"basket header (column {header.column_id}, entry {header.first_entry}, "
                    f"{header.n_entries} entries) disagrees with the index"
                )
            payload = self.source.read_at(entry.file_offset + BASKET_HEADER_SIZE, header.compressed_len)
            if len(payload) < header.compressed_len:
                raise Truncated(f"basket payload needs {header.compressed_len} bytes, {len(payload)} remain")
            if crc32(payload) != header.payload_crc:
                raise CrcMismatch(f"payload crc {crc32(payload):#010x} != stored {header.payload_crc:#010x}")
        except BktError as exc:
            raise exc.attach(column_id, entry.first_entry)
        return header, payload

    def decode_basket(self, column_id: int, entry: IndexEntry) -> ColumnValues:
        header, payload = self.read_basket(column_id, entry)
        try:
            raw = codec.decompress(header.codec_id, payload, header.uncompressed_len)
            return deserialize_values(self.schema.columns[column_id].type, raw, header.n_entries)
        except BktError as exc:
            raise exc.attach(column_id, entry.first_entry)

    # -- whole columns ------------------------------------------------------

    def read_column(self, name: str) -> ColumnValues:
        cid = self.schema.column_id(name)
        return self._read_column_id(cid)

    def _read_column_id(self, cid: int) -> ColumnValues:
        parts = [self.decode_basket(cid, e) for e in self.index[cid]]
        return concat_values(self.schema.columns[cid].type, parts)

    def read_columns_parallel(self, names: Sequence[str]) -> dict[str, ColumnValues]:
        """Read several columns, one work item per column.

        On failure, every task is allowed to settle and the error of the
        failing column that comes first in the schema is raised.
        """
        names = list(names)
        if len(set(names)) != len(names):
            raise ValueError("column names must be distinct")
        ids = {name: self.schema.column_id(name) for name in names}
        by_schema = sorted(names, key=ids.__getitem__)
        if not self.options.imt_enabled:
            # schema order, so the first failure matches the parallel path
            values = {name: self._read_column_id(ids[name]) for name in by_schema}
            return {name: values[name] for name in names}
        with ThreadPoolExecutor(self.options.thread_count, thread_name_prefix="bkt-read") as pool:
            futures = {name: pool.submit(self._read_column_id, ids[name]) for name in by_schema}
            wait(futures.values())
        for name in by_schema:
            exc = futures[name].exception()
            if exc is not None:
                raise exc
        return {name: futures[name].result() for name in names}

    def read_column_pipelined(self, name: str, consumer: Callable[[int, ColumnValues], object]) -> int:
        """Decode baskets ahead on a pool while ``consumer`` handles them in order.

        ``consumer(first_entry, values)`` runs on the calling thread, once per
        basket, in entry order. While basket k is being consumed, at most
        ``pipeline_window`` later baskets are in flight.
        """
        cid = self.schema.column_id(name)
        entries = self.index[cid]
        delivered = 0

        def deliver(entry: IndexEntry, values: ColumnValues) -> None:
            nonlocal delivered
            try:
                consumer(entry.first_entry, values)
            except Exception as exc:
                raise ConsumerError(f"consumer failed on basket at entry {entry.first_entry}: {exc}") from exc
            delivered += len(values)

        if not self.options.imt_enabled:
            for e in entries:
                deliver(e, self.decode_basket(cid, e))
            return delivered

        window = self.options.pipeline_window
        pool = ThreadPoolExecutor(self.options.thread_count, thread_name_prefix="bkt-pipe")
        inflight: deque = deque()
        submitted = 0
        try:
            for k, e in enumerate(entries):
                while submitted < len(entries) and submitted <= k + window:
                    inflight.append(pool.submit(self.decode_basket, cid, entries[submitted]))
                    submitted += 1
                deliver(e, inflight.popleft().result())
        finally:
            for f in inflight:
                f.cancel()
            pool.shutdown(wait=True)
        return delivered

    # -- integrity ----------------------------------------------------------

    def _check(self, task: tuple[int, IndexEntry]) -> BasketFailure | None:
        cid, entry = task
        try:
            self.read_basket(cid, entry)
        except BktError as exc:
            return BasketFailure(self.schema.columns[cid].name, cid, entry.first_entry, f"{type(exc).__name__}: {exc}")
        return None

    def verify(self) -> VerifyReport:
        """CRC-check every basket without decompressing or deserialising."""
        tasks = [(cid, e) for cid, entries in enumerate(self.index) for e in entries]
        if self.options.imt_enabled and len(tasks) > 1:
            with ThreadPoolExecutor(self.options.thread_count, thread_name_prefix="bkt-verify") as pool:
                results = list(pool.map(self._check, tasks))
        else:
            results = [self._check(t) for t in tasks]
        return VerifyReport(len(tasks), [r for r in results if r is not None])


def open(source, options: ReadOptions | None = None) -> FileReader:  # noqa: A001
    return FileReader(source, options)
