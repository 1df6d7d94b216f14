"""Column-parallel read throughput against thread count.

Writes a many-column deflate file into memory once, then times a sequential
baseline and columns-parallel reads at each thread count. CSV on stdout.

    python scripts/columns_parallel_sweep.py --columns 70 --entries 262144 --threads 1 2 4 8
"""

from __future__ import annotations

import argparse

from bkt import FileWriter, MemorySink, Schema, WriterOptions
from bkt.tools import bench_read
from bkt.tools.prng import uniform_f64

from _common import CsvOut


def build_file(columns: int, entries: int, seed: int) -> bytes:
    schema = Schema(tuple((f"x{i}", "f64") for i in range(columns)))
    sink = MemorySink()
    w = FileWriter(sink, schema, WriterOptions(codec="deflate", imt_enabled=True))
    values = uniform_f64(seed, entries)
    step = 1 << 16
    for lo in range(0, entries, step):
        w.append_columns([values[lo:lo + step]] * columns)
    w.close()
    return sink.getvalue()


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--columns", type=int, default=70)
    p.add_argument("--entries", type=int, default=1 << 18)
    p.add_argument("--threads", type=int, nargs="+", default=[1, 2, 4, 8])
    p.add_argument("--seed", type=int, default=42)
    args = p.parse_args()

    image = build_file(args.columns, args.entries, args.seed)
    out = CsvOut()
    for t in args.threads:
        out.write(bench_read(image, "columns", t, baseline=True))


if __name__ == "__main__":
    main()
