"""Parallel columnar event I/O: basket files, a buffer merger, and tools."""

from .codec import CodecId
from .columns import deserialize_values, plan_seal, serialize_values
from .config import disable_imt, enable_imt, imt_enabled
from .errors import *  # noqa: F401,F403
from .format import (
    BasketHeader,
    FileHeader,
    Footer,
    IndexEntry,
    Schema,
    TypeCode,
    crc32,
    decode_basket,
    decode_metadata,
    encode_basket,
    encode_metadata,
)
from .io import BytesSource, FileSink, FileSource, MemorySink
from .merger import BufferMerger, MemFile
from .reader import FileReader, ReadOptions, VerifyReport
from .reader import open as open_reader
from .writer import FileWriter, WriterOptions, WriteSummary
from .writer import create as create_writer

__version__ = "0.1.0"
