"""Command-line tooling: parallel merge and the benchmark harness."""

from .bench import bench_read, bench_write
from .merge import MergeSummary, merge_files
from .report import ThroughputReport, emit_report, parse_report

__all__ = [
    "MergeSummary",
    "ThroughputReport",
    "bench_read",
    "bench_write",
    "emit_report",
    "merge_files",
    "parse_report",
]
