"""Random data and round-trip helpers shared by the test modules."""

from __future__ import annotations

import numpy as np

from bkt import FileWriter, MemorySink, Schema, TypeCode, WriterOptions

FIXED = {
    TypeCode.I32: np.dtype("<u4"),
    TypeCode.I64: np.dtype("<u8"),
    TypeCode.F32: np.dtype("<u4"),
    TypeCode.F64: np.dtype("<u8"),
}
VIEW = {TypeCode.I32: "<i4", TypeCode.I64: "<i8", TypeCode.F32: "<f4", TypeCode.F64: "<f8"}


def random_values(rng: np.random.Generator, type_code: TypeCode, n: int, max_len: int = 24):
    """Arbitrary bit patterns for fixed types (NaNs and infinities included)."""
    if type_code == TypeCode.VAR_BYTES:
        lens = rng.integers(0, max_len + 1, n)
        return [rng.bytes(int(k)) for k in lens]
    bits = rng.integers(0, np.iinfo(FIXED[type_code]).max, n, dtype=FIXED[type_code], endpoint=True)
    return bits.view(VIEW[type_code])


def random_schema(rng: np.random.Generator, ncols: int) -> Schema:
    types = list(TypeCode)
    return Schema(tuple((f"c{i}", types[int(rng.integers(len(types)))]) for i in range(ncols)))


def random_columns(rng, schema: Schema, n: int, max_len: int = 24) -> list:
    return [random_values(rng, t, n, max_len) for t in schema.types]


def same_values(type_code: TypeCode, a, b) -> bool:
    if type_code == TypeCode.VAR_BYTES:
        return list(a) == list(b)
    return len(a) == len(b) and np.asarray(a).tobytes() == np.asarray(b).tobytes()


def write_bytes(schema: Schema, columns, options: WriterOptions | None = None, batches: int = 1) -> bytes:
    sink = MemorySink()
    w = FileWriter(sink, schema, options or WriterOptions(imt_enabled=False, thread_count=1))
    n = len(columns[0]) if columns else 0
    cuts = sorted({0, n, *(int(x) for x in np.linspace(0, n, batches + 1))})
    for lo, hi in zip(cuts, cuts[1:]):
        w.append_columns([c[lo:hi] for c in columns])
    w.close()
    return sink.getvalue()


def concat(type_code: TypeCode, parts):
    if type_code == TypeCode.VAR_BYTES:
        return [v for p in parts for v in p]
    if not parts:
        return np.empty(0, VIEW[type_code])
    return np.concatenate([np.asarray(p, dtype=VIEW[type_code]) for p in parts])


# one line per acceptance criterion, printed at the end of the pytest run
ACCEPTANCE: list[str] = []


def record(number: int, ok: bool, detail: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line, flush=True)
    return line
