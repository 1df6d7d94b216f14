"""Merge several ``.bkt`` files into one, reading inputs in parallel.

Input files are loaded as sealed baskets on ``jobs`` worker threads and fed,
in input order, through a :class:`~bkt.merger.BufferMerger` whose single
output thread appends them. The output therefore holds every input's rows
concatenated in the order given. Baskets are copied verbatim unless a
target codec is requested, in which case mismatching baskets are transcoded.
"""

from __future__ import annotations

import os
import tempfile
from collections import deque
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass

from .. import codec as codecs
from ..errors import BktError, SchemaMismatch
from ..format import BasketHeader, crc32
from ..merger import BufferMerger
from ..reader import FileReader, ReadOptions
from ..writer import SealedBasket, WriterOptions


@dataclass(frozen=True)
class MergeSummary:
    output: str
    inputs: int
    total_entries: int
    baskets: int
    bytes_written: int


def _annotate(exc: BktError, path: str) -> BktError:
    exc.args = (f"{path}: {exc.args[0] if exc.args else type(exc).__name__}",) + exc.args[1:]
    return exc


def _load(reader: FileReader, target_codec, level: int) -> tuple[list[list[SealedBasket]], int]:
    baskets = []
    for cid, entries in enumerate(reader.index):
        col = []
        for e in entries:
            header, payload = reader.read_basket(cid, e)
            payload = bytes(payload)
            if target_codec is not None and header.codec_id != target_codec:
                raw = codecs.decompress(header.codec_id, payload, header.uncompressed_len)
                payload = codecs.compress(target_codec, level, raw)
                header = BasketHeader(cid, int(target_codec), header.n_entries, header.first_entry,
                                      len(raw), len(payload), crc32(payload))
            col.append(SealedBasket(header, payload))
        baskets.append(col)
    return baskets, reader.total_entries


def merge_files(inputs, output, jobs: int = 1, codec=None, level: int = codecs.DEFAULT_LEVEL) -> MergeSummary:
    """Concatenate ``inputs`` into ``output``; nothing is left behind on failure."""
    inputs = [os.fspath(p) for p in inputs]
    if not inputs:
        raise ValueError("merge needs at least one input")
    if jobs < 1:
        raise ValueError("jobs must be positive")
    target = None if codec is None else codecs.CodecId.parse(codec)
    if target is not None:
        codecs.get(target)
    output = os.fspath(output)
    ropts = ReadOptions(imt_enabled=False, thread_count=1)

    with ThreadPoolExecutor(jobs, thread_name_prefix="bkt-merge-in") as pool:
        opened = [pool.submit(FileReader, p, ropts) for p in inputs]
        wait(opened)
        readers = []
        try:
            for path, fut in zip(inputs, opened):
                try:
                    readers.append(fut.result())
                except BktError as exc:
                    raise _annotate(exc, path)
            reference = readers[0].schema.encode()
            for path, r in zip(inputs, readers):
                if r.schema.encode() != reference:
                    raise SchemaMismatch(f"{path}: schema differs from {inputs[0]}")
            return _merge(pool, readers, inputs, output, jobs, target, level)
        finally:
            for fut in opened:
                if fut.exception() is None:
                    fut.result().close()


def _merge(pool, readers, inputs, output, jobs, target, level) -> MergeSummary:
    out_dir = os.path.dirname(os.path.abspath(output))
    fd, tmp = tempfile.mkstemp(prefix=".bkt-merge-", suffix=".tmp", dir=out_dir)
    os.close(fd)
    options = WriterOptions(codec=target if target is not None else codecs.CodecId.DEFLATE,
                            level=level, imt_enabled=False, thread_count=jobs)
    merger = None
    ahead: deque = deque()
    try:
        merger = BufferMerger(tmp, readers[0].schema, options, queue_capacity=2 * jobs)
        nxt = 0
        # keep at most `jobs` inputs loading ahead of the one being enqueued
        for i in range(len(readers)):
            while nxt < len(readers) and nxt <= i + jobs:
                ahead.append(pool.submit(_load, readers[nxt], target, level))
                nxt += 1
            try:
                baskets, n = ahead.popleft().result()
            except BktError as exc:
                raise _annotate(exc, inputs[i])
            handle = merger.get_file()
            handle.adopt(baskets, n)
            handle.close()
        summary = merger.close()
        merger = None
        os.replace(tmp, output)
    except BaseException:
        for f in ahead:
            f.cancel()
        if merger is not None:
            try:
                merger.close()
            except Exception:
                pass
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return MergeSummary(output, len(readers), summary.total_entries, summary.baskets, summary.bytes_written)
