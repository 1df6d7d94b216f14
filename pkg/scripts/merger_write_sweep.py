"""Buffer-merger write throughput against worker count, per codec and sink.

Each point writes ``--entries`` pseudo-random doubles and includes a
one-worker baseline, so speedup_vs_1thread is filled in. CSV on stdout.

    python scripts/merger_write_sweep.py --entries 134217728 --threads 1 2 4 8 --codecs store deflate
    python scripts/merger_write_sweep.py --sink /mnt/ssd/out.bkt
"""

from __future__ import annotations

import argparse
import os

from bkt.tools import bench_write

from _common import CsvOut


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--entries", type=int, default=1 << 24)
    p.add_argument("--threads", type=int, nargs="+", default=[1, 2, 4, 8])
    p.add_argument("--codecs", nargs="+", default=["store", "deflate"])
    p.add_argument("--sink", default="memory", help="'memory' or an output path (removed after each point)")
    p.add_argument("--seed", type=int, default=42)
    args = p.parse_args()

    out = CsvOut()
    for codec in args.codecs:
        for t in args.threads:
            out.write(bench_write(args.entries, t, codec=codec, sink=args.sink, seed=args.seed, baseline=t > 1))
            if args.sink != "memory" and os.path.exists(args.sink):
                os.unlink(args.sink)


if __name__ == "__main__":
    main()
