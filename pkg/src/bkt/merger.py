"""Many writer threads, one output file.

Each worker fills its own :class:`MemFile`, which seals baskets locally (the
CPU-heavy part). Closing a MemFile pushes it onto a bounded queue; a single
merge thread pops MemFiles one by one and appends their baskets to the output
with ``first_entry`` rebased to the running total. Producers block when the
queue is full. No lock is held while compressing or writing to the sink.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from threading import Condition, Event, Lock, Thread
from typing import Sequence

from .errors import HandleClosed, HandlesOutstanding, MergerClosed, SinkError
from .format import Schema
from .writer import (
    ColumnStager,
    FileWriter,
    SealedBasket,
    WriterOptions,
    WriteSummary,
    coerce_columns,
    rows_to_columns,
)


class BoundedQueue:
    """FIFO with a capacity in items that also tracks queued bytes."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("queue capacity must be at least 1")
        self.capacity = capacity
        self._items: deque = deque()
        self._cond = Condition(Lock())
        self.queued_bytes = 0
        self.high_water_bytes = 0
        self.blocked_puts = 0
        self.waiting_producers = 0

    def put(self, item, nbytes: int = 0) -> None:
        with self._cond:
            if len(self._items) >= self.capacity:
                self.blocked_puts += 1
                self.waiting_producers += 1
                while len(self._items) >= self.capacity:
                    self._cond.wait()
                self.waiting_producers -= 1
            self._items.append((item, nbytes))
            self.queued_bytes += nbytes
            self.high_water_bytes = max(self.high_water_bytes, self.queued_bytes)
            self._cond.notify_all()

    def get(self):
        with self._cond:
            while not self._items:
                self._cond.wait()
            item, nbytes = self._items.popleft()
            self.queued_bytes -= nbytes
            self._cond.notify_all()
            return item

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)


class MemFile:
    """Worker-local in-memory file obtained from :meth:`BufferMerger.get_file`.

    Single owner. Baskets are sealed as rows arrive; ``close`` enqueues the
    whole MemFile for merging (and blocks while the queue is full).
    """

    def __init__(self, merger: "BufferMerger"):
        self._merger = merger
        self.schema = merger.schema
        self._stager = ColumnStager(merger.schema, merger.options)
        self.baskets: list[list[SealedBasket]] = [[] for _ in merger.schema.columns]
        self.local_entries = 0
        self.nbytes = 0
        self.sealed = False

    def __enter__(self) -> "MemFile":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if self.sealed:
            return
        if exc_type is None:
            self.close()
        else:
            self.discard()

    @property
    def state(self) -> str:
        return "sealed" if self.sealed else "open"

    def _keep(self, sealed: list[SealedBasket]) -> None:
        for b in sealed:
            self.baskets[b.header.column_id].append(b)
            self.nbytes += b.nbytes

    def _check_open(self) -> None:
        if self.sealed:
            raise HandleClosed("MemFile handle already closed")

    def write(self, rows) -> None:
        self._check_open()
        self.write_columns(rows_to_columns(self.schema, rows))

    def write_columns(self, columns: Sequence) -> None:
        self._check_open()
        cols = coerce_columns(self.schema, columns)
        self._stager.append(cols, self._keep)
        self.local_entries += len(cols[0])

    def adopt(self, baskets: list[list[SealedBasket]], n_entries: int) -> None:
        """Take already sealed, row-complete baskets (first_entry local from 0)."""
        self._check_open()
        if self.local_entries:
            raise ValueError("adopt() needs an empty MemFile")
        for col in baskets:
            for b in col:
                self.baskets[b.header.column_id].append(b)
                self.nbytes += b.nbytes
        self.local_entries = n_entries

    def close(self) -> None:
        self._check_open()
        self._keep(self._stager.seal(force=True))
        self.sealed = True
        try:
            if self.local_entries:
                self._merger._enqueue(self)
        finally:
            self._merger._release()

    def discard(self) -> None:
        """Give the handle back without enqueuing anything."""
        self._check_open()
        self.sealed = True
        self._merger._release()


@dataclass(frozen=True)
class MergerStats:
    merged_files: int
    merged_entries: int
    high_water_bytes: int
    blocked_puts: int


_STOP = object()


class BufferMerger:
    """Multi-producer, single-consumer writer for one output file."""

    def __init__(self, sink, schema: Schema, options: WriterOptions | None = None, queue_capacity: int | None = None):
        self.schema = schema.validate()
        self.options = options or WriterOptions()
        if queue_capacity is None:
            queue_capacity = 2 * self.options.thread_count
        self._queue = BoundedQueue(queue_capacity)
        self._lock = Lock()
        self._live = 0
        self._closed = False
        self._error: BaseException | None = None
        self._summary: WriteSummary | None = None
        self._merged_files = 0
        self._merged_entries = 0
        self._ready = Event()
        self._thread = Thread(target=self._run, args=(sink,), name="bkt-merge", daemon=True)
        self._thread.start()
        self._ready.wait()
        if self._error is not None:
            self._thread.join()
            raise self._error

    @property
    def queue_capacity(self) -> int:
        return self._queue.capacity

    @property
    def stats(self) -> MergerStats:
        q = self._queue
        return MergerStats(self._merged_files, self._merged_entries, q.high_water_bytes, q.blocked_puts)

    @property
    def waiting_producers(self) -> int:
        return self._queue.waiting_producers

    # -- merge thread -------------------------------------------------------

    def _run(self, sink) -> None:
        try:
            # the output writer never seals by itself, so it needs no pool
            out = FileWriter(sink, self.schema, replace(self.options, imt_enabled=False))
        except BaseException as exc:
            self._error = exc
            self._ready.set()
            return
        self._ready.set()
        while True:
            item = self._queue.get()
            if item is _STOP:
                break
            if self._error is not None:
                continue  # poisoned: drain so producers never hang
            try:
                self._merge_one(out, item)
            except BaseException as exc:
                self._error = exc
        if self._error is None:
            try:
                self._summary = out.close()
            except BaseException as exc:
                self._error = exc
        else:
            out.abort()

    def _merge_one(self, out: FileWriter, memfile: MemFile) -> None:
        base = out.rows_appended
        for column in memfile.baskets:
            for b in column:
                out.write_sealed(SealedBasket(b.header.rebased(base), b.payload))
        out.rows_appended += memfile.local_entries
        self._merged_files += 1
        self._merged_entries += memfile.local_entries

    # -- producer side ------------------------------------------------------

    def get_file(self) -> MemFile:
        with self._lock:
            if self._closed:
                raise MergerClosed("merger is closed")
            self._live += 1
        return MemFile(self)

    def _enqueue(self, memfile: MemFile) -> None:
        if self._error is not None:
            raise SinkError("merge output failed; MemFile not accepted") from self._error
        self._queue.put(memfile, memfile.nbytes)

    def _release(self) -> None:
        with self._lock:
            self._live -= 1

    @property
    def live_handles(self) -> int:
        with self._lock:
            return self._live

    def close(self) -> WriteSummary:
        with self._lock:
            if self._closed:
                raise MergerClosed("merger already closed")
            if self._live:
                raise HandlesOutstanding(f"{self._live} MemFile handle(s) still open")
            self._closed = True
        self._queue.put(_STOP)
        self._thread.join()
        if self._error is not None:
            if isinstance(self._error, SinkError):
                raise self._error
            raise SinkError(f"merge thread failed: {self._error}") from self._error
        return self._summary

    def __enter__(self) -> "BufferMerger":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if not self._closed and exc_type is None:
            self.close()
