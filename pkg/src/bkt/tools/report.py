"""ThroughputReport and its CSV / JSON encodings.

CSV columns, in order::

    operation,mode,codec,level,threads,bytes_uncompressed,bytes_stored,
    wall_seconds,throughput_mb_s,baseline_wall_seconds,speedup_vs_1thread,
    worker_cpu_utilization,cpu_count,machine,checksum

Empty cells mean "not measured". JSON objects use the same field names.
"""

from __future__ import annotations

import csv
import io
import json
import os
import platform
from dataclasses import asdict, dataclass, fields


@dataclass
class ThroughputReport:
    operation: str  # read | write | merge
    mode: str
    codec: str
    level: int | None
    threads: int
    bytes_uncompressed: int
    bytes_stored: int | None
    wall_seconds: float
    throughput_mb_s: float
    baseline_wall_seconds: float | None = None
    speedup_vs_1thread: float | None = None
    worker_cpu_utilization: float | None = None
    cpu_count: int = 0
    machine: str = ""
    checksum: str = ""

    @classmethod
    def measure(cls, operation: str, mode: str, codec: str, level, threads: int, nbytes: int, wall: float,
                baseline_wall: float | None = None, **extra) -> "ThroughputReport":
        """Build a report for ``nbytes`` processed in ``wall`` seconds."""
        return cls(
            operation=operation,
            mode=mode,
            codec=codec,
            level=level,
            threads=threads,
            bytes_uncompressed=nbytes,
            bytes_stored=extra.pop("bytes_stored", None),
            wall_seconds=wall,
            throughput_mb_s=throughput(nbytes, wall),
            baseline_wall_seconds=baseline_wall,
            speedup_vs_1thread=None if baseline_wall is None else round(baseline_wall / wall, 3),
            cpu_count=os.cpu_count() or 1,
            machine=machine_description(),
            **extra,
        )

    @classmethod
    def from_dict(cls, raw: dict) -> "ThroughputReport":
        kw = {}
        for f in fields(cls):
            v = raw.get(f.name)
            optional = "None" in f.type
            base = f.type.split("|")[0].strip()
            if v is None or v == "":
                kw[f.name] = None if optional else v
            elif base == "int":
                kw[f.name] = int(v)
            elif base == "float":
                kw[f.name] = float(v)
            else:
                kw[f.name] = str(v)
        return cls(**kw)


FIELDS = [f.name for f in fields(ThroughputReport)]


def throughput(nbytes: int, seconds: float) -> float:
    """Decimal megabytes per second, 3 decimals."""
    return round(nbytes / seconds / 1e6, 3)


def machine_description() -> str:
    return f"{platform.system()} {platform.machine()} {platform.processor() or platform.python_implementation()}".strip()


def emit_report(report: ThroughputReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(asdict(report), sort_keys=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerow({k: ("" if v is None else v) for k, v in asdict(report).items()})
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(text: str, fmt: str = "json") -> ThroughputReport:
    if fmt == "json":
        return ThroughputReport.from_dict(json.loads(text))
    if fmt == "csv":
        rows = list(csv.DictReader(io.StringIO(text)))
        if len(rows) != 1:
            raise ValueError(f"expected one report row, got {len(rows)}")
        return ThroughputReport.from_dict(rows[0])
    raise ValueError(f"unknown report format {fmt!r}")
