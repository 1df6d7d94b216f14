"""Value (de)serialisation and per-column write staging.

Fixed-width columns are numpy arrays with little-endian dtypes; var-bytes
columns are lists of ``bytes``. A var-bytes entry is stored as a u32 length
followed by its bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import TrailingBytes, Truncated, TypeMismatch, ValueOutOfDomain
from .format import TypeCode

ColumnValues = Union[np.ndarray, list]

DTYPES = {
    TypeCode.I32: np.dtype("<i4"),
    TypeCode.I64: np.dtype("<i8"),
    TypeCode.F32: np.dtype("<f4"),
    TypeCode.F64: np.dtype("<f8"),
}

_U32 = struct.Struct("<I")
_MAX_VAR = 2**32 - 1


def _coerce_fixed(type_code: TypeCode, values) -> np.ndarray:
    dtype = DTYPES[type_code]
    arr = np.asarray(values)
    if arr.ndim != 1:
        if arr.size == 0:
            return np.empty(0, dtype)
        raise TypeMismatch(f"{type_code.name} column needs a flat sequence")
    if arr.size == 0:
        return np.empty(0, dtype)
    kind = arr.dtype.kind
    if dtype.kind == "i":
        if kind not in "iu":
            raise TypeMismatch(f"{type_code.name} column got {arr.dtype} values")
        if arr.dtype != dtype:
            info = np.iinfo(dtype)
            if kind == "u" and arr.dtype.itemsize == 8:
                if int(arr.max()) > info.max:
                    raise ValueOutOfDomain(f"value out of range for {type_code.name}")
            elif int(arr.min()) < info.min or int(arr.max()) > info.max:
                raise ValueOutOfDomain(f"value out of range for {type_code.name}")
    elif kind not in "iuf":
        raise TypeMismatch(f"{type_code.name} column got {arr.dtype} values")
    return arr.astype(dtype, copy=False)


def _coerce_var(values) -> list:
    out = []
    for v in values:
        if not isinstance(v, (bytes, bytearray, memoryview)):
            raise TypeMismatch(f"var-bytes entries must be bytes-like, got {type(v).__name__}")
        if len(v) > _MAX_VAR:
            raise ValueOutOfDomain("var-bytes entry longer than 2**32 - 1 bytes")
        out.append(bytes(v))
    return out


def coerce_values(type_code: TypeCode, values) -> ColumnValues:
    """Convert user values to the canonical in-memory form for ``type_code``."""
    if type_code == TypeCode.VAR_BYTES:
        return _coerce_var(values)
    return _coerce_fixed(type_code, values)


def serialize_values(type_code: TypeCode, values) -> bytes:
    type_code = TypeCode(type_code)
    try:
        vals = coerce_values(type_code, values)
    except TypeMismatch as exc:
        raise ValueOutOfDomain(str(exc)) from None
    if type_code == TypeCode.VAR_BYTES:
        return b"".join(_U32.pack(len(v)) + v for v in vals)
    return vals.tobytes()


def serialized_size(type_code: TypeCode, values: ColumnValues) -> int:
    if type_code == TypeCode.VAR_BYTES:
        return sum(4 + len(v) for v in values)
    return len(values) * DTYPES[type_code].itemsize


def deserialize_values(type_code: TypeCode, data, n_entries: int) -> ColumnValues:
    type_code = TypeCode(type_code)
    if type_code != TypeCode.VAR_BYTES:
        need = n_entries * DTYPES[type_code].itemsize
        if len(data) < need:
            raise Truncated(f"{n_entries} {type_code.name} entries need {need} bytes, have {len(data)}")
        if len(data) > need:
            raise TrailingBytes(f"{len(data) - need} bytes left after {n_entries} entries")
        return np.frombuffer(data, dtype=DTYPES[type_code], count=n_entries)
    view = memoryview(data)
    out = []
    pos = 0
    end = len(view)
    for _ in range(n_entries):
        if pos + 4 > end:
            raise Truncated("var-bytes data ends inside a length prefix")
        (n,) = _U32.unpack_from(view, pos)
        pos += 4
        if pos + n > end:
            raise Truncated(f"var-bytes entry declares {n} bytes, {end - pos} remain")
        out.append(bytes(view[pos : pos + n]))
        pos += n
    if pos != end:
        raise TrailingBytes(f"{end - pos} bytes left after {n_entries} entries")
    return out


def concat_values(type_code: TypeCode, parts: Sequence[ColumnValues]) -> ColumnValues:
    if type_code == TypeCode.VAR_BYTES:
        out: list = []
        for p in parts:
            out.extend(p)
        return out
    if not parts:
        return np.empty(0, DTYPES[type_code])
    if len(parts) == 1:
        return parts[0]
    return np.concatenate(parts)


@dataclass
class ColumnBuffer:
    """Pending, not yet sealed entries of one column.

    Owned by a single thread. ``pending_bytes`` is always the serialized size
    of the pending entries.
    """

    column_id: int
    type: TypeCode
    next_first_entry: int = 0
    pending_entries: int = 0
    pending_bytes: int = 0
    chunks: list = field(default_factory=list)
    _owned: int = field(default=0, repr=False)

    def append(self, values: ColumnValues, nbytes: int | None = None) -> None:
        if len(values) == 0:
            return
        self.chunks.append(values)
        self.pending_entries += len(values)
        self.pending_bytes += serialized_size(self.type, values) if nbytes is None else nbytes

    def own_chunks(self) -> None:
        """Copy caller arrays still pending so later mutation cannot leak in."""
        for i in range(self._owned, len(self.chunks)):
            if isinstance(self.chunks[i], np.ndarray):
                self.chunks[i] = self.chunks[i].copy()
        self._owned = len(self.chunks)

    def take(self) -> "PendingBasket":
        """Detach all pending entries as one basket and advance the entry counter."""
        basket = PendingBasket(self.column_id, self.type, self.next_first_entry, self.pending_entries, self.chunks)
        self.next_first_entry += self.pending_entries
        self.pending_entries = 0
        self.pending_bytes = 0
        self.chunks = []
        self._owned = 0
        return basket


@dataclass
class PendingBasket:
    column_id: int
    type: TypeCode
    first_entry: int
    n_entries: int
    chunks: list

    def serialize(self) -> bytes:
        if self.type == TypeCode.VAR_BYTES:
            return b"".join(_U32.pack(len(v)) + v for chunk in self.chunks for v in chunk)
        if len(self.chunks) == 1:
            return self.chunks[0].tobytes()
        return np.concatenate(self.chunks).tobytes()


def plan_seal(buffer: ColumnBuffer, target_bytes: int, force: bool = False) -> bool:
    """True when the pending entries should be sealed into a basket now."""
    if target_bytes < 1:
        raise ValueError("target_bytes must be at least 1")
    if buffer.pending_entries == 0:
        return False
    return force or buffer.pending_bytes >= target_bytes


def rows_until_due(buffer: ColumnBuffer, target_bytes: int, sizes_cumsum: np.ndarray | None, pos: int, n_rows: int) -> int:
    """Row index (exclusive, within a batch) at which ``buffer`` becomes due.

    Entries are considered one row at a time starting at batch row ``pos``;
    returns ``n_rows + 1`` when the batch ends first. ``sizes_cumsum`` is the
    running serialized size over the batch for var-bytes columns.
    """
    need = target_bytes - buffer.pending_bytes
    if need <= 0:
        return pos
    if sizes_cumsum is None:
        width = DTYPES[buffer.type].itemsize
        k = -(-need // width)
        due = pos + k
        return due if due <= n_rows else n_rows + 1
    base = int(sizes_cumsum[pos - 1]) if pos > 0 else 0
    i = int(np.searchsorted(sizes_cumsum, base + need, side="left"))
    return i + 1 if i < n_rows else n_rows + 1
