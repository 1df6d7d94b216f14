"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class BktError(Exception):
    """Base class for all errors raised by bkt.

    Data errors raised while decoding a basket carry the basket's
    ``column_id`` and ``first_entry`` once the reader has attributed them.
    """

    column_id: int | None = None
    first_entry: int | None = None

    def attach(self, column_id: int, first_entry: int | None = None) -> "BktError":
        self.column_id = column_id
        self.first_entry = first_entry
        return self

    def __str__(self) -> str:
        msg = super().__str__()
        if self.column_id is None:
            return msg
        where = f"column {self.column_id}"
        if self.first_entry is not None:
            where += f", basket at entry {self.first_entry}"
        return f"{msg} ({where})"


class FormatError(BktError):
    """Bytes on disk or in a buffer do not follow the file layout."""


class MalformedHeader(FormatError):
    pass


class MalformedFooter(FormatError):
    pass


class IndexInconsistent(FormatError):
    pass


class InvalidSchema(BktError, ValueError):
    pass


class LengthMismatch(FormatError):
    pass


class CrcMismatch(FormatError):
    pass


class Truncated(FormatError):
    pass


class TrailingBytes(FormatError):
    pass


class CorruptStream(FormatError):
    pass


class UnknownCodec(FormatError):
    pass


class ValueOutOfDomain(BktError, ValueError):
    pass


class TypeMismatch(BktError, TypeError):
    pass


class NoSuchColumn(BktError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class SinkError(BktError, OSError):
    pass


class ClosedWriter(BktError):
    pass


class MergerClosed(BktError):
    pass


class HandleClosed(BktError):
    pass


class HandlesOutstanding(BktError):
    pass


class ConsumerError(BktError):
    """A pipelined-read consumer raised; the original is ``__cause__``."""


class SchemaMismatch(BktError):
    pass
