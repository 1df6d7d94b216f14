"""Pipelined basket decompression against thread count and window.

One single-column deflate file, a checksum-fold consumer, and a sequential
baseline per point. CSV on stdout.

    python scripts/pipelined_sweep.py --entries 8388608 --threads 1 2 4 8 --windows 1 2 16
"""

from __future__ import annotations

import argparse

from bkt import FileWriter, MemorySink, Schema, WriterOptions
from bkt.tools import bench_read
from bkt.tools.prng import uniform_f64

from _common import CsvOut


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--entries", type=int, default=1 << 23)
    p.add_argument("--threads", type=int, nargs="+", default=[1, 2, 4, 8])
    p.add_argument("--windows", type=int, nargs="+", default=[1, 2, 16])
    p.add_argument("--seed", type=int, default=42)
    args = p.parse_args()

    sink = MemorySink()
    with FileWriter(sink, Schema.of(("x", "f64")), WriterOptions(codec="deflate")) as w:
        w.append_columns([uniform_f64(args.seed, args.entries)])
    image = sink.getvalue()

    out = CsvOut()
    for t in args.threads:
        for window in args.windows:
            out.write(bench_read(image, "pipelined", t, baseline=True, window=window))


if __name__ == "__main__":
    main()
