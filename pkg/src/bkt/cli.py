"""``bkt`` command line: merge, bench write, bench read, verify.

Exit codes: 0 success, 1 data or format error, 2 usage error. Reports go
to standard output, diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import sys

from . import config
from .errors import BktError
from .reader import FileReader, ReadOptions
from .tools.bench import READ_MODES, bench_read, bench_write
from .tools.merge import merge_files
from .tools.report import emit_report


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _level(text: str) -> int:
    value = int(text)
    if not 0 <= value <= 9:
        raise argparse.ArgumentTypeError("level must be in 0..9")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bkt", description="Parallel columnar basket files.")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("merge", help="concatenate files with identical schemas")
    m.add_argument("-o", "--output", required=True)
    m.add_argument("-j", "--jobs", type=_positive, default=1)
    m.add_argument("--codec", choices=["store", "deflate"], default=None,
                   help="transcode baskets to this codec (default: copy baskets as they are)")
    m.add_argument("--level", type=_level, default=6)
    m.add_argument("inputs", nargs="+")

    b = sub.add_parser("bench", help="throughput benchmarks")
    bsub = b.add_subparsers(dest="bench_command", required=True)

    bw = bsub.add_parser("write", help="buffer-merger write of pseudo-random doubles")
    bw.add_argument("--entries", type=_positive, required=True)
    bw.add_argument("--threads", type=_positive, required=True)
    bw.add_argument("--codec", choices=["store", "deflate"], default="deflate")
    bw.add_argument("--level", type=_level, default=6)
    bw.add_argument("--sink", default="memory", help="'memory' or an output path")
    bw.add_argument("--seed", type=int, default=42)
    bw.add_argument("--basket-bytes", type=_positive, default=32 * 1024)
    bw.add_argument("--format", choices=["json", "csv"], default="json")
    bw.add_argument("--baseline", action="store_true", help="also run with 1 worker and report the speedup")

    br = bsub.add_parser("read", help="time a read strategy on FILE")
    br.add_argument("file")
    br.add_argument("--mode", choices=READ_MODES, required=True)
    br.add_argument("--threads", type=_positive, required=True)
    br.add_argument("--columns", default=None, help="comma-separated column names (default: all)")
    br.add_argument("--window", type=_positive, default=None, help="pipeline window in baskets")
    br.add_argument("--format", choices=["json", "csv"], default="json")
    br.add_argument("--baseline", action="store_true", help="also run sequentially and report the speedup")

    v = sub.add_parser("verify", help="CRC-check every basket")
    v.add_argument("file")
    v.add_argument("--threads", type=_positive, default=None)
    return p


def _verify(args) -> int:
    threads = args.threads or config.hardware_threads()
    with FileReader(args.file, ReadOptions(imt_enabled=True, thread_count=threads)) as reader:
        report = reader.verify()
    for f in report.failures:
        print(f"FAIL column {f.column!r} (id {f.column_id}) basket at entry {f.first_entry}: {f.reason}",
              file=sys.stderr)
    print(f"{args.file}: {report.baskets} baskets, {report.passed} passed, {len(report.failures)} failed")
    return 0 if report.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "merge":
            s = merge_files(args.inputs, args.output, jobs=args.jobs, codec=args.codec, level=args.level)
            print(f"merged {s.inputs} file(s) into {s.output}: {s.total_entries} entries, "
                  f"{s.baskets} baskets, {s.bytes_written} bytes")
            return 0
        if args.command == "verify":
            return _verify(args)
        if args.bench_command == "write":
            report = bench_write(args.entries, args.threads, codec=args.codec, level=args.level, sink=args.sink,
                                 seed=args.seed, baseline=args.baseline, basket_bytes=args.basket_bytes)
        else:
            columns = [c for c in args.columns.split(",") if c] if args.columns else None
            report = bench_read(args.file, args.mode, args.threads, columns=columns, baseline=args.baseline,
                                window=args.window)
        sys.stdout.write(emit_report(report, args.format))
        return 0
    except (BktError, OSError) as exc:
        print(f"bkt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
