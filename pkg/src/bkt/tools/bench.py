"""Throughput benchmarks for the parallel read and write paths.

Only the I/O phase is timed: data generation and read-back verification
happen outside the clock.
"""

from __future__ import annotations

import os
import threading
import time
import zlib
from dataclasses import dataclass

import numpy as np

from ..codec import CodecId
from ..errors import BktError, FormatError
from ..format import Schema, TypeCode
from ..io import MemorySink
from ..merger import BufferMerger
from ..reader import FileReader, ReadOptions
from ..writer import DEFAULT_BASKET_BYTES, WriterOptions
from . import prng
from .report import ThroughputReport

READ_MODES = ("sequential", "columns", "pipelined")


class ChecksumFold:
    """CRC-32 folded over every delivered value, in delivery order.

    Folding per basket gives the same result as folding the whole column.
    """

    def __init__(self):
        self.crc = 0
        self.nbytes = 0

    def add(self, values) -> None:
        if isinstance(values, np.ndarray):
            self.crc = zlib.crc32(np.ascontiguousarray(values), self.crc)
            self.nbytes += values.nbytes
        else:
            for v in values:
                self.crc = zlib.crc32(len(v).to_bytes(4, "little"), self.crc)
                self.crc = zlib.crc32(v, self.crc)
                self.nbytes += 4 + len(v)

    @property
    def hexdigest(self) -> str:
        return f"{self.crc & 0xFFFFFFFF:08x}"


class MultisetDigest:
    """Order-independent digest of f64 values: XOR and wrapping sum of the bit patterns."""

    def __init__(self):
        self.xor = 0
        self.sum = 0
        self.count = 0

    def add(self, values: np.ndarray) -> None:
        bits = np.ascontiguousarray(values).view(np.uint64)
        self.xor ^= int(np.bitwise_xor.reduce(bits, initial=np.uint64(0)))
        self.sum = (self.sum + int(np.add.reduce(bits, dtype=np.uint64))) & 0xFFFFFFFFFFFFFFFF
        self.count += len(bits)

    @property
    def hexdigest(self) -> str:
        return f"{self.xor:016x}{self.sum:016x}-{self.count}"


@dataclass
class _WriteRun:
    wall: float
    cpu_utilization: float
    sink: object
    bytes_written: int


def _write_once(data: np.ndarray, threads: int, options: WriterOptions, sink) -> _WriteRun:
    schema = Schema.of(("x", TypeCode.F64))
    n = len(data)
    bounds = [i * n // threads for i in range(threads + 1)]
    cpu = [0.0] * threads
    wall = [0.0] * threads
    errors: list[BaseException] = []

    def work(i: int) -> None:
        t0 = time.perf_counter()
        c0 = time.thread_time()
        try:
            with merger.get_file() as f:
                f.write_columns([data[bounds[i] : bounds[i + 1]]])
        except BaseException as exc:
            errors.append(exc)
        cpu[i] = time.thread_time() - c0
        wall[i] = time.perf_counter() - t0

    t0 = time.perf_counter()
    merger = BufferMerger(sink, schema, options, queue_capacity=2 * threads)
    workers = [threading.Thread(target=work, args=(i,), name=f"bench-writer-{i}") for i in range(threads)]
    for w in workers:
        w.start()
    for w in workers:
        w.join()
    if errors:
        merger.close()
        raise errors[0]
    summary = merger.close()
    elapsed = time.perf_counter() - t0
    util = float(np.mean([c / w for c, w in zip(cpu, wall) if w > 0])) if threads else 0.0
    return _WriteRun(elapsed, util, sink, summary.bytes_written)


def bench_write(entries: int, threads: int, codec="deflate", level: int = 6, sink="memory", seed: int = 42,
                baseline: bool = False, basket_bytes: int = DEFAULT_BASKET_BYTES) -> ThroughputReport:
    """Buffer-merger write of ``entries`` splitmix64 doubles from ``threads`` workers.

    ``sink`` is ``"memory"`` or an output path. The produced file is verified
    and its value multiset digested after timing.
    """
    if entries < 1:
        raise ValueError("entries must be at least 1")
    if threads < 1:
        raise ValueError("threads must be at least 1")
    codec = CodecId.parse(codec)
    data = prng.uniform_f64(seed, entries)

    def make_sink():
        return MemorySink() if sink == "memory" else os.fspath(sink)

    def options(n: int) -> WriterOptions:
        # workers seal inline; parallelism comes from the workers themselves
        return WriterOptions(basket_target_bytes=basket_bytes, codec=codec, level=level, imt_enabled=False,
                             thread_count=n)

    base_wall = None
    if baseline:
        base_wall = _write_once(data, 1, options(1), make_sink()).wall
    run = _write_once(data, threads, options(threads), make_sink())
    del data

    source = run.sink.getvalue() if isinstance(run.sink, MemorySink) else run.sink
    with FileReader(source, ReadOptions(imt_enabled=True, thread_count=threads)) as reader:
        report = reader.verify()
        if not report.ok:
            first = report.failures[0]
            raise FormatError(f"bench output failed verification: {len(report.failures)} bad baskets, "
                              f"first at column {first.column!r} entry {first.first_entry}")
        digest = MultisetDigest()
        reader.read_column_pipelined("x", lambda _first, values: digest.add(values))

    return ThroughputReport.measure(
        "write", "buffer-merger", codec.name.lower(), level, threads, entries * 8, run.wall, base_wall,
        bytes_stored=run.bytes_written,
        worker_cpu_utilization=round(run.cpu_utilization, 4),
        checksum=digest.hexdigest,
    )


def _read_once(reader: FileReader, mode: str, names: list[str]) -> tuple[float, ChecksumFold]:
    fold = ChecksumFold()
    t0 = time.perf_counter()
    if mode == "sequential":
        for name in names:
            fold.add(reader.read_column(name))
    elif mode == "columns":
        values = reader.read_columns_parallel(names)
        for name in names:
            fold.add(values[name])
    elif mode == "pipelined":
        for name in names:
            reader.read_column_pipelined(name, lambda _first, v: fold.add(v))
    else:
        raise ValueError(f"unknown read mode {mode!r}")
    return time.perf_counter() - t0, fold


def bench_read(source, mode: str, threads: int, columns: list[str] | None = None, baseline: bool = False,
               window: int | None = None) -> ThroughputReport:
    """Time one read strategy over ``source`` (a path or an in-memory file image).

    An untimed sequential pass warms the process first. With ``baseline``
    the sequential strategy is then timed on the same file; both timed runs
    must produce the same checksum fold.
    """
    if mode not in READ_MODES:
        raise ValueError(f"mode must be one of {READ_MODES}")
    seq = ReadOptions(imt_enabled=False, thread_count=1)
    par = ReadOptions(imt_enabled=mode != "sequential", thread_count=threads, pipeline_window=window)
    with FileReader(source, seq) as base_reader:
        names = list(columns) if columns else base_reader.schema.names
        for name in names:
            base_reader.schema.column_id(name)
        codec_names = {_codec_of(base_reader, name) for name in names}
        # untimed warm-up so neither timed run pays for first-touch allocation
        _read_once(base_reader, "sequential", names)
        base_wall = None
        if baseline:
            base_wall, base_fold = _read_once(base_reader, "sequential", names)
    with FileReader(source, par) as reader:
        wall, fold = _read_once(reader, mode, names)
    if baseline and base_fold.crc != fold.crc:
        raise BktError(f"{mode} read disagrees with sequential read ({fold.hexdigest} != {base_fold.hexdigest})")
    return ThroughputReport.measure(
        "read", mode, "+".join(sorted(codec_names)), None, 1 if mode == "sequential" else threads,
        fold.nbytes, wall, base_wall, checksum=fold.hexdigest,
    )


def _codec_of(reader: FileReader, name: str) -> str:
    entries = reader.index[reader.schema.column_id(name)]
    if not entries:
        return "none"
    header, _ = reader.read_basket(reader.schema.column_id(name), entries[0])
    try:
        return CodecId(header.codec_id).name.lower()
    except ValueError:
        return str(header.codec_id)
