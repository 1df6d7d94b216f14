"""Shared bits for the sweep scripts: CSV output of ThroughputReports."""

from __future__ import annotations

import sys

from bkt.tools import emit_report


class CsvOut:
    def __init__(self, stream=sys.stdout):
        self.stream = stream
        self.header_done = False

    def write(self, report) -> None:
        lines = emit_report(report, "csv").splitlines(keepends=True)
        if not self.header_done:
            self.stream.write(lines[0])
            self.header_done = True
        self.stream.write(lines[1])
        self.stream.flush()
